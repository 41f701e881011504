/**
 * Editor state: the loaded project, the visible frame, the ghost layer, and
 * play mode.  Every state change round-trips through the protocol; the ghost
 * is never computed locally -- it is always the latest predict.get response
 * for the visible frame.
 */

import {
  BUTTONS,
  noButtons,
  ProtocolClient,
  RequestFailed,
  type ButtonMap,
  type FrameJson,
  type LearnSummary,
  type Notification,
  type ObjectJson,
  type ProjectJson,
} from "./protocol.js";

export type ConnectionState = "connected" | "disconnected";
export type PlayState = "stopped" | "running";

function emptyFrame(index: number, prevButtons: ButtonMap): FrameJson {
  return {
    index,
    input: { buttons: noButtons(), prevButtons },
    objects: [],
  };
}

export class EditorViewModel {
  project: ProjectJson | null = null;
  frames: FrameJson[] = [];
  frameIndex = 0;
  /** Latest predict.get response for the visible frame; null on frame 0. */
  ghost: FrameJson | null = null;
  ghostGeneration = -1;
  selectedSprite: string | null = null;
  generation = 0;
  lastLearn: LearnSummary | null = null;
  connectionState: ConnectionState = "connected";
  playState: PlayState = "stopped";
  playFrame: FrameJson | null = null;
  playTick = 0;
  banners: string[] = [];

  private changeHandlers: (() => void)[] = [];
  private heldButtons: ButtonMap = noButtons();

  constructor(private client: ProtocolClient) {
    client.onNotification((note) => this.onNotification(note));
    client.onClose(() => {
      this.connectionState = "disconnected";
      if (this.playState === "running") {
        this.playState = "stopped";
        this.banner("connection lost; play paused -- reconnect to continue");
      }
      this.emitChange();
    });
  }

  onChange(handler: () => void): void {
    this.changeHandlers.push(handler);
  }

  private emitChange(): void {
    for (const handler of this.changeHandlers) handler();
  }

  private banner(text: string): void {
    this.banners.push(text);
    this.emitChange();
  }

  dismissBanner(index: number): void {
    this.banners.splice(index, 1);
    this.emitChange();
  }

  private async guarded<T>(action: () => Promise<T>): Promise<T | null> {
    try {
      return await action();
    } catch (error) {
      if (error instanceof RequestFailed) {
        this.banner(`${error.kind}: ${error.message}`);
        return null;
      }
      this.banner(String(error));
      return null;
    }
  }

  // -- project and frames ---------------------------------------------------

  async loadProject(path: string): Promise<void> {
    const payload = await this.guarded(() =>
      this.client.request<{ project: ProjectJson }>("project.load", { path }),
    );
    if (!payload) return;
    this.adoptProject(payload.project);
    await this.selectFrame(0);
  }

  /** Adopt an already-loaded project (e.g. when the server preloads one). */
  adoptProject(project: ProjectJson): void {
    this.project = project;
    this.frames = project.frames.map((f) => structuredClone(f));
    this.frameIndex = 0;
    this.ghost = null;
    this.selectedSprite = project.sprites[0]?.name ?? null;
    this.emitChange();
  }

  async saveProject(path: string): Promise<void> {
    await this.guarded(() => this.client.request("project.save", { path }));
  }

  get frameCount(): number {
    return this.frames.length;
  }

  currentFrame(): FrameJson | null {
    return this.frames[this.frameIndex] ?? null;
  }

  /**
   * Rebuild the frame mirror from the server (frame.get until out of range).
   * A reloaded UI calls this to reconstruct the identical view.
   */
  async resync(): Promise<void> {
    const fresh: FrameJson[] = [];
    for (let index = 0; ; index++) {
      try {
        const payload = await this.client.request<{ frame: FrameJson }>("frame.get", { index });
        fresh.push(payload.frame);
      } catch (error) {
        if (error instanceof RequestFailed && error.kind === "range") break;
        throw error;
      }
    }
    this.frames = fresh;
    this.frameIndex = Math.min(this.frameIndex, Math.max(0, fresh.length - 1));
    this.emitChange();
  }

  // -- navigation and the ghost layer ----------------------------------------

  async selectFrame(index: number): Promise<void> {
    if (index < 0 || index > this.frameCount) return;
    this.frameIndex = index;
    if (index === this.frameCount) {
      // Brand-new frame: starts empty; the ghost previews the engine's guess.
      const prev = this.frames[index - 1]?.input.buttons ?? noButtons();
      this.frames.push(emptyFrame(index, prev));
      await this.pushFrame(index);
    }
    await this.refreshGhost();
    this.emitChange();
  }

  async nextFrame(): Promise<void> {
    await this.selectFrame(this.frameIndex + 1);
  }

  async prevFrame(): Promise<void> {
    await this.selectFrame(Math.max(0, this.frameIndex - 1));
  }

  async refreshGhost(): Promise<void> {
    if (this.frameIndex === 0 || this.frameCount === 0) {
      this.ghost = null;
      this.emitChange();
      return;
    }
    const payload = await this.guarded(() =>
      this.client.request<{ frame: FrameJson; generation: number }>("predict.get", {
        index: this.frameIndex,
      }),
    );
    if (!payload) return;
    this.ghost = payload.frame;
    this.ghostGeneration = payload.generation;
    this.emitChange();
  }

  async acceptGhost(): Promise<void> {
    if (this.frameIndex === 0) return;
    const payload = await this.guarded(() =>
      this.client.request<{ frame: FrameJson }>("predict.accept", { index: this.frameIndex }),
    );
    if (!payload) return;
    this.frames[this.frameIndex] = payload.frame;
    await this.refreshGhost();
  }

  // -- editing ----------------------------------------------------------------

  private async pushFrame(index: number): Promise<void> {
    // Optimistic local edit already applied; reconcile on failure by
    // refetching the server's copy.
    const sent = this.frames[index];
    const result = await this.guarded(() =>
      this.client.request("frame.set", { index, frame: sent }),
    );
    if (result === null) {
      await this.resync();
      return;
    }
    this.emitChange();
  }

  async placeObject(x: number, y: number): Promise<void> {
    const frame = this.currentFrame();
    if (!frame || !this.selectedSprite) return;
    const existing = frame.objects.find((o) => o.x === x && o.y === y);
    if (existing) return;
    const usedIds = new Set<number>();
    for (const f of this.frames) for (const o of f.objects) usedIds.add(o.id);
    let id = 0;
    while (usedIds.has(id)) id++;
    frame.objects.push({
      id,
      sprite: this.selectedSprite,
      x,
      y,
      vx: 0,
      vy: 0,
      vxUserSet: false,
      vyUserSet: false,
    });
    await this.pushFrame(this.frameIndex);
  }

  async moveObject(id: number, x: number, y: number): Promise<void> {
    const frame = this.currentFrame();
    const object = frame?.objects.find((o) => o.id === id);
    if (!frame || !object) return;
    object.x = x;
    object.y = y;
    await this.pushFrame(this.frameIndex);
  }

  async removeObject(id: number): Promise<void> {
    const frame = this.currentFrame();
    if (!frame) return;
    frame.objects = frame.objects.filter((o) => o.id !== id);
    await this.pushFrame(this.frameIndex);
  }

  objectAt(x: number, y: number): ObjectJson | undefined {
    return this.currentFrame()?.objects.find((o) => o.x === x && o.y === y);
  }

  async toggleButton(name: keyof ButtonMap): Promise<void> {
    const frame = this.currentFrame();
    if (!frame) return;
    const buttons = { ...frame.input.buttons, [name]: !frame.input.buttons[name] };
    const payload = await this.guarded(() =>
      this.client.request<{ frame: FrameJson }>("input.set", {
        index: this.frameIndex,
        buttons,
      }),
    );
    if (!payload) return;
    this.frames[this.frameIndex] = payload.frame;
    // Button edits feed the next frame's prev chain; its mirror is stale now.
    if (this.frameIndex + 1 < this.frameCount) {
      const next = await this.guarded(() =>
        this.client.request<{ frame: FrameJson }>("frame.get", { index: this.frameIndex + 1 }),
      );
      if (next) this.frames[this.frameIndex + 1] = next.frame;
    }
    this.emitChange();
  }

  // -- learning -----------------------------------------------------------------

  async runLearn(): Promise<LearnSummary | null> {
    const summary = await this.guarded(() => this.client.request<LearnSummary>("learn.run"));
    if (!summary) return null;
    this.generation = summary.generation;
    this.lastLearn = summary;
    await this.refreshGhost();
    return summary;
  }

  // -- play mode ------------------------------------------------------------------

  async startPlay(options: { frameIndex?: number; manual?: boolean; fps?: number } = {}): Promise<void> {
    const payload: Record<string, unknown> = { frameIndex: options.frameIndex ?? 0 };
    if (options.manual !== undefined) payload.manual = options.manual;
    if (options.fps !== undefined) payload.fps = options.fps;
    const started = await this.guarded(() => this.client.request("play.start", payload));
    if (started === null) return;
    this.playState = "running";
    this.playTick = 0;
    this.playFrame = null;
    this.heldButtons = noButtons();
    this.emitChange();
  }

  /** Forward the full held-button state for the next tick. */
  async sendPlayButtons(buttons: Partial<ButtonMap>): Promise<void> {
    if (this.playState !== "running") return;
    this.heldButtons = { ...noButtons(), ...buttons };
    await this.guarded(() =>
      this.client.request("play.input", { buttons: this.heldButtons }),
    );
  }

  async keyDown(name: keyof ButtonMap): Promise<void> {
    if (this.playState !== "running") return;
    if (this.heldButtons[name]) return;
    await this.sendPlayButtons({ ...this.heldButtons, [name]: true });
  }

  async keyUp(name: keyof ButtonMap): Promise<void> {
    if (this.playState !== "running") return;
    await this.sendPlayButtons({ ...this.heldButtons, [name]: false });
  }

  async stopPlay(): Promise<void> {
    if (this.playState !== "running") return;
    await this.guarded(() => this.client.request("play.stop"));
    this.playState = "stopped";
    this.playFrame = null;
    this.emitChange();
  }

  private onNotification(note: Notification): void {
    if (note.event === "play.frame") {
      const payload = note.payload as { tick: number; frame: FrameJson };
      this.playTick = payload.tick;
      this.playFrame = payload.frame;
      this.emitChange();
      return;
    }
    if (note.event === "learn.finished") {
      const payload = note.payload as LearnSummary;
      this.generation = payload.generation;
      this.lastLearn = payload;
      void this.refreshGhost();
    }
  }
}

export { BUTTONS };
export type { ButtonMap, FrameJson, ObjectJson, ProjectJson };
