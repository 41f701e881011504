"""The long-lived editor session and its newline-delimited JSON protocol.

One session owns one project.  Clients send one JSON object per line with
fields ``{type, requestId, payload}`` and get exactly one response
``{requestId, ok, payload}`` or ``{requestId, ok: false, error}``; the server
may additionally push notifications ``{event, payload}`` (play-mode frame
snapshots, background learn completions).  See docs/protocol.md for the full
schema.

The session relearns from frame 0 with the previous engine as the starting
point -- synchronously via ``learn.run``, or in the background after every
committed edit when auto-relearn is on (debounced: one learn in flight, the
newest edit wins).
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import replace

from . import demos, facts as F, persistence as P
from .engine import Engine, predict_facts
from .errors import RulesmithError, SchemaError
from .evaluation import frame_error
from .facts import Frame, InputState
from .learning import learn
from .runtime import start_play, step

PROTOCOL_TYPES = (
    "project.load",
    "project.save",
    "frame.get",
    "frame.set",
    "input.set",
    "predict.get",
    "predict.accept",
    "learn.run",
    "engine.export",
    "play.start",
    "play.input",
    "play.stop",
    "eval.run",
)


class RequestError(RulesmithError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _empty_project() -> P.Project:
    return P.Project(name="untitled")


def relearn_policy(session: "Session") -> bool:
    """True when the session has edits the engine has not seen yet."""
    return session.dirty


class Session:
    """Owns a project, its learned engine, and the optional play loop."""

    def __init__(self, project: P.Project = None, auto_relearn: bool = False,
                 event_log=None, notify=None):
        self._lock = threading.RLock()
        self.project = project if project is not None else _empty_project()
        self.engine = self.project.engine if self.project.engine is not None else Engine()
        self.learn_generation = 0
        self.dirty = False
        self.relearn_count = 0
        self._edit_counter = 0
        self._notify = notify if notify is not None else (lambda message: None)
        self._event_log = event_log if event_log is not None else os.environ.get("MM_LOG")
        self._play = None
        self._play_thread = None
        self._play_stop = threading.Event()
        self._play_buttons = {}
        self._play_manual = False
        self._play_ticks = 0
        self._stopping = False
        self._auto = auto_relearn
        self._wake = threading.Event()
        self._worker = None
        if auto_relearn:
            self._worker = threading.Thread(target=self._relearn_worker, daemon=True)
            self._worker.start()

    # -- plumbing ----------------------------------------------------------

    def _log(self, kind: str, payload=None):
        if not self._event_log:
            return
        P.append_event(self._event_log, P.make_event(kind, payload))

    def close(self):
        self._stopping = True
        self._stop_play()
        self._wake.set()
        if self._worker is not None:
            self._worker.join(timeout=5)

    def handle_line(self, line: str):
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return ({"requestId": None, "ok": False,
                     "error": {"kind": "bad-json", "message": f"invalid JSON: {exc.msg}"}}, [])
        if not isinstance(message, dict):
            return ({"requestId": None, "ok": False,
                     "error": {"kind": "bad-request", "message": "message must be an object"}}, [])
        return self.handle(message)

    def handle(self, message: dict):
        """Dispatch one request; returns (response, notifications)."""
        request_id = message.get("requestId")
        if not isinstance(request_id, (int, type(None))):
            request_id = None
        mtype = message.get("type")
        payload = message.get("payload", {})
        if not isinstance(payload, dict):
            return self._error(request_id, "bad-request", "payload must be an object"), []
        if not isinstance(mtype, str) or mtype not in PROTOCOL_TYPES:
            return self._error(request_id, "unknown-type", f"unknown message type {mtype!r}"), []
        handler = getattr(self, "_op_" + mtype.replace(".", "_"))
        notifications = []
        try:
            with self._lock:
                result = handler(payload, notifications)
        except RequestError as exc:
            return self._error(request_id, exc.kind, str(exc)), notifications
        except SchemaError as exc:
            return self._error(request_id, "schema", str(exc)), notifications
        except RulesmithError as exc:
            return self._error(request_id, type(exc).__name__, str(exc)), notifications
        return {"requestId": request_id, "ok": True, "payload": result}, notifications

    @staticmethod
    def _error(request_id, kind, message):
        return {"requestId": request_id, "ok": False,
                "error": {"kind": kind, "message": message}}

    # -- frame bookkeeping -------------------------------------------------

    def _frames(self) -> list:
        return list(self.project.frames)

    def _commit_frames(self, frames: list):
        """Reindex, rebuild the prev-button chain, and mark the project dirty."""
        fixed = []
        prev_pressed = frozenset()
        for i, frame in enumerate(frames):
            fixed.append(replace(frame, index=i,
                                 input=InputState(frame.input.pressed, prev_pressed)))
            prev_pressed = frame.input.pressed
        self.project = replace(self.project, frames=tuple(fixed))
        self.dirty = True
        self._edit_counter += 1
        if self._auto:
            self._wake.set()

    def _frame_index(self, payload, allow_append=False) -> int:
        index = payload.get("index")
        if not isinstance(index, int) or isinstance(index, bool):
            raise RequestError("bad-request", "payload.index must be an integer")
        limit = len(self.project.frames) + (1 if allow_append else 0)
        if not (0 <= index < max(limit, 1)) or (not allow_append and index >= len(self.project.frames)):
            raise RequestError("range", f"frame index {index} out of range "
                                        f"(have {len(self.project.frames)} frames)")
        return index

    def _sprite_map(self) -> dict:
        return {s.name: s for s in self.project.sprites}

    # -- prediction --------------------------------------------------------

    def _ghost(self, index: int) -> Frame:
        frames = self.project.frames
        if not frames:
            raise RequestError("range", "project has no frames")
        if index == 0:
            return frames[0]
        if index > len(frames):
            raise RequestError("range", f"cannot predict frame {index} with {len(frames)} frames")
        derived = F.derive_velocities(list(frames[:index]), self.project.config.vmax)
        universe = F.universe_of(list(frames))
        source_facts = F.extract_facts(derived[-1], universe)
        if index < len(frames):
            injected = frames[index].input
        else:
            injected = InputState(frozenset(), frames[index - 1].input.pressed)
        source_facts = F.replace_variable_facts(source_facts, injected)
        result = predict_facts(
            self.engine,
            source_facts,
            kinematics=self.project.config.kinematics,
            grid_width=self.project.grid_width,
            grid_height=self.project.grid_height,
        )
        ghost = F.frame_from_facts(
            result.facts, index, self.project.grid_width, self.project.grid_height
        )
        return replace(ghost, input=injected)

    # -- operations --------------------------------------------------------

    def _op_project_load(self, payload, notes):
        path = payload.get("path")
        if not isinstance(path, str):
            raise RequestError("bad-request", "payload.path must be a string")
        try:
            project = P.load_project(path)
        except OSError as exc:
            raise RequestError("io", f"cannot read {path}: {exc.strerror or exc}")
        self.project = project
        self.engine = project.engine if project.engine is not None else Engine()
        self.dirty = False
        self.learn_generation = 0
        return {"project": P.project_to_json(self.project)}

    def _op_project_save(self, payload, notes):
        path = payload.get("path")
        if not isinstance(path, str):
            raise RequestError("bad-request", "payload.path must be a string")
        project = replace(self.project, engine=self.engine)
        try:
            P.save_project(project, path)
        except OSError as exc:
            raise RequestError("io", f"cannot write {path}: {exc.strerror or exc}")
        self._log("project-saved", {"path": path})
        return {"path": path}

    def _op_frame_get(self, payload, notes):
        index = self._frame_index(payload)
        return {"frame": P.frame_to_json(self.project.frames[index])}

    def _op_frame_set(self, payload, notes):
        index = self._frame_index(payload, allow_append=True)
        frame_doc = payload.get("frame")
        if not isinstance(frame_doc, dict):
            raise RequestError("bad-request", "payload.frame must be an object")
        frame = P.frame_from_json(
            frame_doc, self._sprite_map(),
            self.project.grid_width, self.project.grid_height,
            where=f"frame[{index}]",
        )
        frames = self._frames()
        if index == len(frames):
            frames.append(frame)
        else:
            frames[index] = frame
        self._commit_frames(frames)
        self._log("frame-edited", {"index": index})
        return {"frameCount": len(self.project.frames)}

    def _op_input_set(self, payload, notes):
        index = self._frame_index(payload)
        buttons = payload.get("buttons")
        if not isinstance(buttons, dict):
            raise RequestError("bad-request", "payload.buttons must be an object")
        unknown = set(buttons) - set(F.BUTTONS)
        if unknown:
            raise RequestError("bad-request", f"unknown buttons: {sorted(unknown)}")
        frames = self._frames()
        pressed = frozenset(b for b, v in buttons.items() if v)
        frames[index] = replace(frames[index],
                                input=InputState(pressed, frames[index].input.prev_pressed))
        self._commit_frames(frames)
        self._log("frame-edited", {"index": index})
        return {"frame": P.frame_to_json(self.project.frames[index])}

    def _op_predict_get(self, payload, notes):
        index = payload.get("index")
        if not isinstance(index, int) or isinstance(index, bool) or index < 0:
            raise RequestError("bad-request", "payload.index must be a non-negative integer")
        ghost = self._ghost(index)
        self._log("prediction-shown", {"index": index})
        return {"frame": P.frame_to_json(ghost), "generation": self.learn_generation}

    def _op_predict_accept(self, payload, notes):
        index = payload.get("index")
        if not isinstance(index, int) or isinstance(index, bool) or index < 0:
            raise RequestError("bad-request", "payload.index must be a non-negative integer")
        ghost = self._ghost(index)
        frames = self._frames()
        if index == len(frames):
            frames.append(ghost)
        else:
            frames[index] = ghost
        self._commit_frames(frames)
        self._log("prediction-accepted", {"index": index})
        return {"frame": P.frame_to_json(self.project.frames[index]),
                "frameCount": len(self.project.frames)}

    def _op_learn_run(self, payload, notes):
        return self._relearn_now()

    def _relearn_now(self):
        self._log("learn-started", {"generation": self.learn_generation})
        try:
            result = learn(list(self.project.frames), self.project.config, self.engine)
        except RulesmithError as exc:
            # The session keeps its best-effort engine; say so in the error.
            raise RequestError(
                "learn",
                f"{exc} (keeping the current {len(self.engine.rules)}-rule engine)",
            ) from exc
        self.engine = result.engine
        self.learn_generation += 1
        self.relearn_count += 1
        self.dirty = False
        summary = {
            "generation": self.learn_generation,
            "converged": result.converged,
            "totalError": result.total_error,
            "ruleCount": len(self.engine.rules),
        }
        self._log("learn-finished", summary)
        return summary

    def _op_engine_export(self, payload, notes):
        return {
            "json": P.export_engine_json(self.engine),
            "text": P.export_engine_text(self.engine),
            "ruleCount": len(self.engine.rules),
        }

    def _op_eval_run(self, payload, notes):
        if "fixture" in payload:
            name = payload["fixture"]
            if not isinstance(name, str):
                raise RequestError("bad-request", "payload.fixture must be a string")
            frames = list(demos.named_fixture(name).frames)
        elif "reference" in payload:
            frames = list(P.load_project(payload["reference"]).frames)
        else:
            frames = list(self.project.frames)
        report = frame_error(self.engine, frames, self.project.config)
        return report.to_json()

    # -- play mode ---------------------------------------------------------

    def _op_play_start(self, payload, notes):
        if self._play is not None:
            raise RequestError("play", "play mode already running")
        frames = self.project.frames
        if not frames:
            raise RequestError("range", "project has no frames")
        frame_index = payload.get("frameIndex", 0)
        if not isinstance(frame_index, int) or not (0 <= frame_index < len(frames)):
            raise RequestError("range", f"frameIndex out of range")
        manual = bool(payload.get("manual", False))
        fps = payload.get("fps", self.project.tick_rate)
        if not isinstance(fps, (int, float)) or (not manual and fps <= 0):
            raise RequestError("bad-request", "fps must be positive")
        derived = F.derive_velocities(list(frames[: frame_index + 1]), self.project.config.vmax)
        self._play = start_play(
            self.engine,
            derived[frame_index],
            F.universe_of(list(frames)),
            self.project.config,
        )
        self._play_buttons = {}
        self._play_manual = manual
        self._play_ticks = 0
        self._log("play-started", {"frameIndex": frame_index, "manual": manual})
        if not manual:
            self._play_stop.clear()
            self._play_thread = threading.Thread(
                target=self._play_loop, args=(1.0 / float(fps),), daemon=True
            )
            self._play_thread.start()
        return {"frameIndex": frame_index, "manual": manual}

    def _play_tick(self) -> dict:
        frame = step(self._play, self._play_buttons)
        self._play_ticks += 1
        return {"event": "play.frame",
                "payload": {"tick": self._play_ticks, "frame": P.frame_to_json(frame)}}

    def _play_loop(self, interval: float):
        while not self._play_stop.wait(interval):
            # Never block on the session lock: play.stop joins this thread
            # while holding it, so a busy session just skips the tick.
            if not self._lock.acquire(blocking=False):
                continue
            try:
                if self._play is None:
                    return
                note = self._play_tick()
            finally:
                self._lock.release()
            self._notify(note)

    def _op_play_input(self, payload, notes):
        if self._play is None:
            raise RequestError("play", "play mode is not running")
        buttons = payload.get("buttons", {})
        if not isinstance(buttons, dict):
            raise RequestError("bad-request", "payload.buttons must be an object")
        unknown = set(buttons) - set(F.BUTTONS)
        if unknown:
            raise RequestError("bad-request", f"unknown buttons: {sorted(unknown)}")
        self._play_buttons = {b: bool(v) for b, v in buttons.items()}
        if self._play_manual:
            notes.append(self._play_tick())
        return {"tick": self._play_ticks}

    def _op_play_stop(self, payload, notes):
        self._stop_play()
        return {"ticks": self._play_ticks}

    def _stop_play(self):
        if self._play_thread is not None:
            self._play_stop.set()
            self._play_thread.join(timeout=5)
            self._play_thread = None
        if self._play is not None:
            self._play = None
            self._log("play-ended", {"ticks": self._play_ticks})

    # -- background relearn --------------------------------------------------

    def _relearn_worker(self):
        while True:
            self._wake.wait()
            self._wake.clear()
            if self._stopping:
                return
            with self._lock:
                if not self.dirty:
                    continue
                target = self._edit_counter
                frames = list(self.project.frames)
                config = self.project.config
                previous = self.engine
            # Learn outside the lock so edits keep flowing; commit only if no
            # newer edit arrived meanwhile (the newest edit wins).
            try:
                result = learn(frames, config, previous)
            except RulesmithError:
                continue
            done = None
            with self._lock:
                if self._edit_counter != target:
                    self._wake.set()
                    continue
                self.engine = result.engine
                self.learn_generation += 1
                self.relearn_count += 1
                self.dirty = False
                done = {
                    "generation": self.learn_generation,
                    "converged": result.converged,
                    "totalError": result.total_error,
                    "ruleCount": len(self.engine.rules),
                }
            self._log("learn-finished", done)
            self._notify({"event": "learn.finished", "payload": done})

    def wait_idle(self, timeout: float = 10.0) -> bool:
        """Block until no relearn is pending (auto mode); True on quiescence."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if not self.dirty:
                    return True
            time.sleep(0.01)
        return False


# ---------------------------------------------------------------------------
# Servers: stdio and unix-domain stream socket, one JSON object per line.
# ---------------------------------------------------------------------------

def _pump(session: Session, read_line, write_line):
    for line in iter(read_line, None):
        line = line.strip()
        if not line:
            continue
        response, notifications = session.handle_line(line)
        write_line(json.dumps(response))
        for note in notifications:
            write_line(json.dumps(note))


def serve_stdio(project: P.Project = None, auto_relearn: bool = False, event_log=None,
                stdin=None, stdout=None):
    import sys

    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    write_lock = threading.Lock()

    def write_line(text):
        with write_lock:
            stdout.write(text + "\n")
            stdout.flush()

    session = Session(project, auto_relearn, event_log,
                      notify=lambda note: write_line(json.dumps(note)))

    def read_line():
        line = stdin.readline()
        return line if line else None

    try:
        _pump(session, read_line, write_line)
    finally:
        session.close()


def serve_socket(path, project: P.Project = None, auto_relearn: bool = False, event_log=None,
                 ready=None, stop=None):
    """Listen on a unix socket; one client session at a time."""
    import socket

    if os.path.exists(path):
        os.unlink(path)
    server = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    server.bind(str(path))
    server.listen(1)
    server.settimeout(0.2)
    if ready is not None:
        ready.set()
    try:
        while stop is None or not stop.is_set():
            try:
                conn, _ = server.accept()
            except socket.timeout:
                continue
            with conn:
                reader = conn.makefile("r", encoding="utf-8")
                write_lock = threading.Lock()

                def write_line(text, _conn=conn, _lock=write_lock):
                    with _lock:
                        _conn.sendall((text + "\n").encode("utf-8"))

                session = Session(project, auto_relearn, event_log,
                                  notify=lambda note: write_line(json.dumps(note)))
                try:
                    _pump(session, lambda: (reader.readline() or None), write_line)
                except (BrokenPipeError, ConnectionResetError):
                    pass
                finally:
                    session.close()
    finally:
        server.close()
        if os.path.exists(path):
            os.unlink(path)
