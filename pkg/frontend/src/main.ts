/**
 * Browser entry: wires the view model to the canvas, the sprite palette, the
 * per-frame input toggles, frame navigation, and play-mode keyboard input
 * (space and the arrow keys).
 */

import { ProtocolClient, BUTTONS, type ButtonMap } from "./protocol.js";
import { WebSocketTransport } from "./ws-transport.js";
import { EditorViewModel } from "./viewmodel.js";
import { CELL, buildScene, paint, screenRow, spriteColor } from "./render.js";

const KEY_TO_BUTTON: Record<string, keyof ButtonMap> = {
  " ": "space",
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot() {
  const transport = await WebSocketTransport.connect(`ws://${location.host}/session`);
  const client = new ProtocolClient(transport);
  const vm = new EditorViewModel(client);

  const canvas = el<HTMLCanvasElement>("grid");
  const ctx = canvas.getContext("2d")!;
  const status = el<HTMLElement>("status");
  const palette = el<HTMLElement>("palette");
  const toggles = el<HTMLElement>("input-toggles");
  const banners = el<HTMLElement>("banners");

  const render = () => {
    const project = vm.project;
    if (project) {
      canvas.width = project.gridWidth * CELL;
      canvas.height = project.gridHeight * CELL;
    }
    paint(ctx, buildScene(vm));
    const frame = vm.currentFrame();
    status.textContent = vm.playState === "running"
      ? `play mode -- tick ${vm.playTick} (esc stops)`
      : `frame ${vm.frameIndex + 1} / ${vm.frameCount}` +
        (vm.lastLearn ? ` -- ${vm.lastLearn.ruleCount} rules` +
          (vm.lastLearn.converged ? "" : " (not converged)") : "");

    palette.innerHTML = "";
    for (const sprite of vm.project?.sprites ?? []) {
      const button = document.createElement("button");
      button.textContent = sprite.name;
      button.style.borderColor = spriteColor(sprite.name);
      button.className = vm.selectedSprite === sprite.name ? "selected" : "";
      button.onclick = () => {
        vm.selectedSprite = sprite.name;
        render();
      };
      palette.appendChild(button);
    }

    toggles.innerHTML = "";
    for (const name of BUTTONS) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = frame?.input.buttons[name] ?? false;
      box.onchange = () => void vm.toggleButton(name);
      label.appendChild(box);
      label.appendChild(document.createTextNode(name));
      toggles.appendChild(label);
    }

    banners.innerHTML = "";
    vm.banners.forEach((text, index) => {
      const div = document.createElement("div");
      div.className = "banner";
      div.textContent = text;
      const close = document.createElement("button");
      close.textContent = "x";
      close.onclick = () => vm.dismissBanner(index);
      div.appendChild(close);
      banners.appendChild(div);
    });
  };
  vm.onChange(render);

  const cellAt = (event: MouseEvent) => {
    const rect = canvas.getBoundingClientRect();
    const x = Math.floor((event.clientX - rect.left) / CELL);
    const row = Math.floor((event.clientY - rect.top) / CELL);
    return { x, y: screenRow(row, vm.project!.gridHeight) };
  };

  // Click places the selected sprite, shift-click removes, and pressing on an
  // object then releasing on another cell drags it there.
  let dragging: { id: number; fromX: number; fromY: number } | null = null;
  canvas.addEventListener("mousedown", (event) => {
    if (vm.playState === "running" || !vm.project) return;
    const { x, y } = cellAt(event);
    const existing = vm.objectAt(x, y);
    dragging = existing ? { id: existing.id, fromX: x, fromY: y } : null;
  });
  canvas.addEventListener("mouseup", (event) => {
    if (vm.playState === "running" || !vm.project) return;
    const { x, y } = cellAt(event);
    const grabbed = dragging;
    dragging = null;
    if (grabbed && (x !== grabbed.fromX || y !== grabbed.fromY)) {
      if (!vm.objectAt(x, y)) void vm.moveObject(grabbed.id, x, y);
      return;
    }
    const existing = vm.objectAt(x, y);
    if (existing && event.shiftKey) {
      void vm.removeObject(existing.id);
    } else if (!existing) {
      void vm.placeObject(x, y);
    }
  });

  el<HTMLButtonElement>("prev").onclick = () => void vm.prevFrame();
  el<HTMLButtonElement>("next").onclick = () => void vm.nextFrame();
  el<HTMLButtonElement>("accept").onclick = () => void vm.acceptGhost();
  el<HTMLButtonElement>("learn").onclick = () => void vm.runLearn();
  el<HTMLButtonElement>("play").onclick = () => {
    if (vm.playState === "running") {
      void vm.stopPlay();
    } else {
      void vm.startPlay({ frameIndex: 0 });
    }
    render();
  };

  window.addEventListener("keydown", (event) => {
    if (event.key === "Escape" && vm.playState === "running") {
      void vm.stopPlay();
      return;
    }
    const button = KEY_TO_BUTTON[event.key];
    if (button && vm.playState === "running") {
      event.preventDefault();
      void vm.keyDown(button);
    }
  });
  window.addEventListener("keyup", (event) => {
    const button = KEY_TO_BUTTON[event.key];
    if (button && vm.playState === "running") {
      event.preventDefault();
      void vm.keyUp(button);
    }
  });

  // The bridge publishes the project path; load it through the protocol so
  // the whole view (grid, sprites, frames) comes from the session.
  const config = await fetch("/config.json").then((r) => r.json());
  await vm.loadProject(config.projectPath);
  render();
}

void boot();
