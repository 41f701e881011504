import json
import random
import string

from rulesmith.demos import flappy_project, sokoban_project, PLAYER, CRATE
from rulesmith.engine import predict_facts
from rulesmith.learning import learn, prepare_demonstration
from rulesmith.persistence import Project, frame_to_json, read_events
from rulesmith.facts import Frame, GameObject, InputState
from rulesmith.service import Session, relearn_policy


def request(session, mtype, payload=None, request_id=1):
    response, notes = session.handle(
        {"type": mtype, "requestId": request_id, "payload": payload or {}}
    )
    return response, notes


def ok(session, mtype, payload=None):
    response, notes = request(session, mtype, payload)
    assert response["ok"], response
    return response["payload"], notes


def _sokoban_two_frames() -> Project:
    frames = (
        Frame(index=0, objects=(GameObject(0, PLAYER, 1, 4), GameObject(1, CRATE, 4, 4))),
        Frame(index=1, objects=(GameObject(0, PLAYER, 2, 4), GameObject(1, CRATE, 4, 4)),
              input=InputState.make(("right",))),
    )
    return Project(name="mini", sprites=(PLAYER, CRATE), frames=frames)


class TestPrediction:
    def test_ghost_before_learning_is_prior_frame(self):
        session = Session(_sokoban_two_frames())
        payload, _ = ok(session, "predict.get", {"index": 1})
        ghost_objs = {o["id"]: (o["x"], o["y"]) for o in payload["frame"]["objects"]}
        assert ghost_objs == {0: (1, 4), 1: (4, 4)}  # unchanged prior frame
        session.close()

    def test_frame_zero_ghost_is_itself(self):
        session = Session(_sokoban_two_frames())
        payload, _ = ok(session, "predict.get", {"index": 0})
        assert payload["frame"] == frame_to_json(session.project.frames[0])
        session.close()

    def test_learned_ghost_advances_object(self):
        session = Session(_sokoban_two_frames())
        ok(session, "learn.run")
        payload, _ = ok(session, "predict.get", {"index": 1})
        ghost_objs = {o["id"]: (o["x"], o["y"]) for o in payload["frame"]["objects"]}
        assert ghost_objs[0] == (2, 4)  # learned right-walk applied
        session.close()

    def test_accept_ghost_commits_frame(self):
        session = Session(_sokoban_two_frames())
        ok(session, "learn.run")
        ghost, _ = ok(session, "predict.get", {"index": 2})
        payload, _ = ok(session, "predict.accept", {"index": 2})
        assert payload["frameCount"] == 3
        got, _ = ok(session, "frame.get", {"index": 2})
        assert got["frame"]["objects"] == ghost["frame"]["objects"]
        assert relearn_policy(session)
        session.close()


class TestPlayMode:
    def test_space_press_raises_bird(self, flappy_engine):
        from dataclasses import replace

        session = Session(replace(flappy_project(), engine=flappy_engine))
        ok(session, "play.start", {"frameIndex": 2, "manual": True})
        payload, notes = ok(session, "play.input", {"buttons": {"space": True}})
        assert len(notes) == 1
        frame = notes[0]["payload"]["frame"]
        bird = next(o for o in frame["objects"] if o["id"] == 0)
        assert bird["vy"] == 1
        assert bird["y"] == 4
        payload, _ = ok(session, "play.stop")
        assert payload["ticks"] == 1
        session.close()

    def test_play_requires_start(self):
        session = Session(flappy_project())
        response, _ = request(session, "play.input", {"buttons": {}})
        assert not response["ok"]
        session.close()

    def test_timed_play_pushes_notifications(self, flappy_engine):
        import time
        from dataclasses import replace

        pushed = []
        session = Session(replace(flappy_project(), engine=flappy_engine),
                          notify=pushed.append)
        ok(session, "play.start", {"fps": 200})
        deadline = time.monotonic() + 5.0
        while len(pushed) < 3 and time.monotonic() < deadline:
            time.sleep(0.01)
        ok(session, "play.stop")
        assert len(pushed) >= 3
        assert all(n["event"] == "play.frame" for n in pushed[:3])
        ticks = [n["payload"]["tick"] for n in pushed[:3]]
        assert ticks == sorted(ticks)
        session.close()


class TestRelearn:
    def test_learn_run_bumps_generation(self):
        session = Session(flappy_project())
        payload, _ = ok(session, "learn.run")
        assert payload["generation"] == 1
        assert payload["converged"]
        payload, _ = ok(session, "learn.run")
        assert payload["generation"] == 2
        session.close()

    def test_quiescent_engine_matches_one_shot_learn(self):
        # Build the sokoban demo frame by frame through the protocol, with a
        # relearn after each edit: the final engine must behave exactly like a
        # single fresh learn over the final frames.
        session = Session(Project(name="inc", sprites=(PLAYER, CRATE)))
        target = sokoban_project()
        for i, frame in enumerate(target.frames):
            ok(session, "frame.set", {"index": i, "frame": frame_to_json(frame)})
            if i >= 1:
                ok(session, "learn.run")
        assert not session.dirty
        fresh = learn(list(target.frames)).engine
        incremental = session.engine
        demo = prepare_demonstration(list(target.frames), target.config)
        for t in range(len(demo) - 1):
            source = demo.source_facts(t)
            a = predict_facts(incremental, source, grid_width=demo.grid_width,
                              grid_height=demo.grid_height)
            b = predict_facts(fresh, source, grid_width=demo.grid_width,
                              grid_height=demo.grid_height)
            assert a.facts == b.facts
        session.close()

    def test_auto_relearn_debounces(self):
        session = Session(Project(name="auto", sprites=(PLAYER, CRATE)),
                          auto_relearn=True)
        target = sokoban_project()
        for i, frame in enumerate(target.frames):
            ok(session, "frame.set", {"index": i, "frame": frame_to_json(frame)})
        assert session.wait_idle(timeout=30)
        assert session.relearn_count <= len(target.frames)
        fresh = learn(list(target.frames)).engine
        demo = prepare_demonstration(list(target.frames), target.config)
        for t in range(len(demo) - 1):
            source = demo.source_facts(t)
            a = predict_facts(session.engine, source, grid_width=demo.grid_width,
                              grid_height=demo.grid_height)
            b = predict_facts(fresh, source, grid_width=demo.grid_width,
                              grid_height=demo.grid_height)
            assert a.facts == b.facts
        session.close()

    def test_no_edits_no_relearn(self):
        session = Session(flappy_project(), auto_relearn=True)
        assert session.wait_idle(timeout=5)
        assert session.relearn_count == 0
        assert not relearn_policy(session)
        session.close()


class TestProtocolRobustness:
    def test_unknown_type(self):
        session = Session()
        response, _ = request(session, "frame.delete")
        assert not response["ok"]
        assert response["error"]["kind"] == "unknown-type"
        session.close()

    def test_out_of_range_index(self):
        session = Session(flappy_project())
        response, _ = request(session, "frame.get", {"index": 99})
        assert not response["ok"]
        assert response["error"]["kind"] == "range"
        session.close()

    def test_learn_failure_reports_error(self):
        session = Session(Project(name="empty"))
        response, _ = request(session, "learn.run")
        assert not response["ok"]
        assert "2 frames" in response["error"]["message"]
        session.close()

    def test_fuzzed_lines_never_crash(self):
        session = Session(flappy_project())
        rng = random.Random(99)
        alphabet = string.printable
        for _ in range(300):
            line = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
            response, _ = session.handle_line(line)
            assert isinstance(response["ok"], bool)
        session.close()

    def test_fuzzed_payloads_get_error_responses(self):
        session = Session(flappy_project())
        rng = random.Random(7)
        values = [None, True, 1.5, -3, "x", [], {}, {"index": "nope"},
                  {"index": 10**9}, {"frame": 3}, {"buttons": "all"}]
        for mtype in ("frame.get", "frame.set", "input.set", "predict.get",
                      "predict.accept", "play.start", "play.input", "eval.run",
                      "project.load", "project.save"):
            for _ in range(20):
                payload = rng.choice(values)
                message = {"type": mtype, "requestId": 1, "payload": payload}
                response, _ = session.handle(message)
                assert isinstance(response["ok"], bool)
        session.close()


class TestSocketServer:
    def test_unix_socket_round_trip(self, tmp_path):
        import socket as socket_module
        import threading

        from rulesmith.service import serve_socket

        path = str(tmp_path / "mm.sock")
        ready = threading.Event()
        stop = threading.Event()
        server = threading.Thread(
            target=serve_socket,
            args=(path, flappy_project()),
            kwargs={"ready": ready, "stop": stop},
            daemon=True,
        )
        server.start()
        assert ready.wait(timeout=10)
        try:
            client = socket_module.socket(socket_module.AF_UNIX, socket_module.SOCK_STREAM)
            client.connect(path)
            reader = client.makefile("r")
            client.sendall(b'{"type": "learn.run", "requestId": 1, "payload": {}}\n')
            response = json.loads(reader.readline())
            assert response["ok"] and response["payload"]["converged"]
            client.sendall(b'{"type": "frame.get", "requestId": 2, "payload": {"index": 0}}\n')
            response = json.loads(reader.readline())
            assert response["payload"]["frame"]["index"] == 0
            client.shutdown(socket_module.SHUT_RDWR)
            reader.close()
            client.close()
        finally:
            stop.set()
            server.join(timeout=10)
        assert not server.is_alive()


class TestEventsAndState:
    def test_event_log_records_session(self, tmp_path):
        log = tmp_path / "events.jsonl"
        session = Session(_sokoban_two_frames(), event_log=str(log))
        ok(session, "learn.run")
        ok(session, "predict.get", {"index": 1})
        ok(session, "predict.accept", {"index": 2})
        ok(session, "project.save", {"path": str(tmp_path / "out.mmproj")})
        session.close()
        kinds = [r.kind for r in read_events(log)]
        assert kinds == ["learn-started", "learn-finished", "prediction-shown",
                         "prediction-accepted", "project-saved"]

    def test_save_then_load_round_trip(self, tmp_path):
        session = Session(_sokoban_two_frames())
        ok(session, "learn.run")
        path = str(tmp_path / "mini.mmproj")
        ok(session, "project.save", {"path": path})
        other = Session()
        payload, _ = ok(other, "project.load", {"path": path})
        assert payload["project"]["name"] == "mini"
        assert len(other.engine.rules) == len(session.engine.rules)
        session.close()
        other.close()

    def test_input_set_rebuilds_prev_chain(self):
        session = Session(_sokoban_two_frames())
        ok(session, "input.set", {"index": 0, "buttons": {"up": True}})
        frame1, _ = ok(session, "frame.get", {"index": 1})
        assert frame1["frame"]["input"]["prevButtons"]["up"] is True
        session.close()

    def test_eval_run_named_fixture(self, sokoban_engine):
        from dataclasses import replace

        session = Session(replace(sokoban_project(), engine=sokoban_engine))
        payload, _ = ok(session, "eval.run", {"fixture": "sokoban"})
        assert payload["meanError"] == 0.0
        assert payload["beatBaseline"]
        session.close()
