"""HTTP JSON API for live teaching sessions and grasp previews.

A session wraps one knowledge base plus an append-only event log in the
same shape as the batch-experiment timeline (teach / ask / correct rows
with an instance id attached). The log is the durable form: replaying it
through a fresh learner reproduces the knowledge base bit for bit, which
the state digest in every session payload makes checkable from outside.

Objects come from a directory of cloud files (label = subdirectory name,
when nested) or, by default, from a small built-in catalog of sampled
primitives so the API is usable with no data on disk.

Errors are JSON `{code, message}`: unknown_session / unknown_object /
unknown_instance (404), no_knowledge / unknown_category (409),
validation_error (422).
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import NoKnowledgeError, UnknownCategoryError
from .features import FeatureVector, describe_cloud, render_views
from .geometry import PointCloud, load_cloud, sample_primitive
from .grasping import AnnealSchedule, plan_grasp
from .learner import KnowledgeBase, save_kb
from .projection import DEFAULT_GRASP_BINS, FIXED_SIZE
from .protocol import sliding_accuracy
from .views import rank_views

_CLOUD_SUFFIXES = (".xyz", ".ply")

_BUILTIN_CATALOG = [
    ("box", (0.05, 0.05, 0.05)),
    ("box", (0.07, 0.05, 0.03)),
    ("box", (0.06, 0.06, 0.02)),
    ("cylinder", (0.02, 0.10)),
    ("cylinder", (0.03, 0.12)),
    ("cylinder", (0.025, 0.06)),
    ("sphere", (0.03,)),
    ("sphere", (0.04,)),
    ("sphere", (0.05,)),
]


class ApiError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


class ObjectStore:
    """Clouds by id, with optional ground-truth labels and a descriptor
    cache (descriptors are deterministic, so caching is transparent)."""

    def __init__(self, objects_dir=None, points_per_builtin: int = 400):
        self._clouds: Dict[str, PointCloud] = {}
        self._labels: Dict[str, Optional[str]] = {}
        self._descriptors: Dict[str, FeatureVector] = {}
        if objects_dir is None:
            for i, (shape, params) in enumerate(_BUILTIN_CATALOG):
                oid = f"{shape}_{i}"
                self._clouds[oid] = sample_primitive(
                    shape, params, points_per_builtin, seed=1000 + i
                )
                self._labels[oid] = shape
        else:
            root = Path(objects_dir)
            for f in sorted(root.rglob("*")):
                if f.suffix not in _CLOUD_SUFFIXES:
                    continue
                oid = f.stem
                self._clouds[oid] = load_cloud(f)
                self._labels[oid] = f.parent.name if f.parent != root else None

    @property
    def ids(self) -> List[str]:
        return sorted(self._clouds)

    def cloud(self, object_id: str) -> PointCloud:
        if object_id not in self._clouds:
            raise ApiError("unknown_object", f"no object {object_id!r}", 404)
        return self._clouds[object_id]

    def label(self, object_id: str) -> Optional[str]:
        return self._labels.get(object_id)

    def descriptor(self, object_id: str) -> FeatureVector:
        if object_id not in self._descriptors:
            self._descriptors[object_id] = describe_cloud(self.cloud(object_id))
        return self._descriptors[object_id]


class Session:
    def __init__(self, sid: str, smoothing: float, window_factor: int):
        self.id = sid
        self.kb = KnowledgeBase(smoothing)
        self.window_factor = window_factor
        self.events: List[dict] = []
        self.window_samples: List[float] = []
        self.last_prediction: Optional[dict] = None
        self.lock = threading.Lock()

    @property
    def ask_count(self) -> int:
        return sum(1 for e in self.events if e["event"] == "ask")

    def graded_results(self) -> List[bool]:
        return [
            e["correct"]
            for e in self.events
            if e["event"] == "ask" and e["correct"] is not None
        ]

    def window_accuracy(self) -> Optional[float]:
        if not self.kb.categories:
            return None
        return sliding_accuracy(
            self.graded_results(), len(self.kb.categories), self.window_factor
        )


def kb_digest(kb: KnowledgeBase) -> str:
    return hashlib.sha256(
        json.dumps(save_kb(kb), sort_keys=True).encode()
    ).hexdigest()


def replay_events(events: List[dict], store: ObjectStore, smoothing: float) -> KnowledgeBase:
    """Rebuild a knowledge base from a session's teach/correct events."""
    kb = KnowledgeBase(smoothing)
    for e in events:
        if e["event"] == "teach":
            kb.teach(e["label"], [store.descriptor(e["instance_id"])])
        elif e["event"] == "correct":
            kb.correct(e["label"], store.descriptor(e["instance_id"]))
    return kb


class SessionBody(BaseModel):
    smoothing: float = 0.01
    window_factor: int = 3


class TeachBody(BaseModel):
    label: str
    instance_ids: List[str]


class AskBody(BaseModel):
    instance_id: str


class CorrectBody(BaseModel):
    label: str
    instance_id: str


class GraspBody(BaseModel):
    seed: int = 0
    budget: int = 16
    iters: int = 60


def create_app(objects_dir=None, view_bins: int = DEFAULT_GRASP_BINS) -> FastAPI:
    app = FastAPI(title="teaching service")
    store = ObjectStore(objects_dir)
    sessions: Dict[str, Session] = {}

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"code": "validation_error", "message": str(exc)}
        )

    def get_session(sid: str) -> Session:
        if sid not in sessions:
            raise ApiError("unknown_session", f"no session {sid!r}", 404)
        return sessions[sid]

    def resolve(instance_id: str) -> FeatureVector:
        try:
            return store.descriptor(instance_id)
        except ApiError:
            raise ApiError("unknown_instance", f"no instance {instance_id!r}", 404)

    def state_payload(s: Session) -> dict:
        return {
            "id": s.id,
            "categories": {l: s.kb.categories[l].n for l in s.kb.labels},
            "n_total": s.kb.n_total,
            "d": s.kb.d,
            "window_accuracy": s.window_accuracy(),
            "last_prediction": s.last_prediction,
            "kb_digest": kb_digest(s.kb),
            "events": list(s.events),
        }

    def metrics_payload(s: Session) -> dict:
        asks = [e for e in s.events if e["event"] == "ask"]
        graded = [e["correct"] for e in asks if e["correct"] is not None]
        absorbed = sum(1 for e in s.events if e["event"] in ("teach", "correct"))
        alc = len(s.kb.categories)
        return {
            "qci": len(asks),
            "alc": alc,
            "aic": absorbed / alc if alc else 0.0,
            "gca": sum(graded) / len(graded) if graded else 0.0,
            "apa": float(np.mean(s.window_samples)) if s.window_samples else 0.0,
            "window_accuracy": s.window_accuracy(),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: Optional[SessionBody] = None):
        body = body or SessionBody()
        sid = uuid.uuid4().hex[:12]
        sessions[sid] = Session(sid, body.smoothing, body.window_factor)
        return state_payload(sessions[sid])

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        return state_payload(get_session(sid))

    @app.get("/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        return metrics_payload(get_session(sid))

    @app.post("/sessions/{sid}/teach")
    def post_teach(sid: str, body: TeachBody):
        s = get_session(sid)
        instances = [(iid, resolve(iid)) for iid in body.instance_ids]
        if not instances:
            raise ApiError("validation_error", "instance_ids must be nonempty", 422)
        with s.lock:
            s.kb.teach(body.label, [x for _, x in instances])
            for iid, _ in instances:
                s.events.append(
                    {
                        "iteration": s.ask_count,
                        "event": "teach",
                        "label": body.label,
                        "predicted": None,
                        "correct": None,
                        "instance_id": iid,
                    }
                )
        return state_payload(s)

    @app.post("/sessions/{sid}/ask")
    def post_ask(sid: str, body: AskBody):
        s = get_session(sid)
        x = resolve(body.instance_id)
        with s.lock:
            try:
                prediction = s.kb.classify(x)
            except NoKnowledgeError as exc:
                raise ApiError("no_knowledge", str(exc), 409)
            truth = store.label(body.instance_id)
            hit = None if truth is None else prediction.label == truth
            s.events.append(
                {
                    "iteration": s.ask_count + 1,
                    "event": "ask",
                    "label": truth,
                    "predicted": prediction.label,
                    "correct": hit,
                    "instance_id": body.instance_id,
                }
            )
            s.last_prediction = {
                "instance_id": body.instance_id,
                "label": prediction.label,
                "log_scores": prediction.log_scores,
            }
            acc = s.window_accuracy()
            if acc is not None:
                s.window_samples.append(acc)
        return {
            "prediction": s.last_prediction,
            "true_label": truth,
            "correct": hit,
            "window_accuracy": acc,
            "session": state_payload(s),
        }

    @app.post("/sessions/{sid}/correct")
    def post_correct(sid: str, body: CorrectBody):
        s = get_session(sid)
        x = resolve(body.instance_id)
        with s.lock:
            try:
                s.kb.correct(body.label, x)
            except UnknownCategoryError as exc:
                raise ApiError("unknown_category", str(exc), 409)
            s.events.append(
                {
                    "iteration": s.ask_count,
                    "event": "correct",
                    "label": body.label,
                    "predicted": None,
                    "correct": None,
                    "instance_id": body.instance_id,
                }
            )
        return state_payload(s)

    @app.get("/objects")
    def get_objects():
        return {
            "objects": [
                {
                    "id": oid,
                    "label": store.label(oid),
                    "points": len(store.cloud(oid)),
                }
                for oid in store.ids
            ]
        }

    @app.get("/objects/{oid}/views")
    def get_views(oid: str):
        views = render_views(store.cloud(oid), bins=view_bins, mode=FIXED_SIZE)
        ranked = rank_views(views)
        return {
            "object_id": oid,
            "bins": view_bins,
            "plane_side": views[0].camera.plane_side,
            "best": ranked[0].view_index,
            "ranking": [
                {"view_index": r.view_index, "entropy_bits": r.entropy_bits}
                for r in ranked
            ],
            "views": [
                {
                    "index": i,
                    "entropy_bits": next(
                        r.entropy_bits for r in ranked if r.view_index == i
                    ),
                    "grid": v.grid.tolist(),
                }
                for i, v in enumerate(views)
            ],
        }

    @app.post("/objects/{oid}/grasp")
    def post_grasp(oid: str, body: Optional[GraspBody] = None):
        body = body or GraspBody()
        plan = plan_grasp(
            store.cloud(oid),
            budget=body.budget,
            seed=body.seed,
            bins=view_bins,
            schedule=AnnealSchedule(iters=body.iters),
        )
        u, v = plan.best.center_px
        return {
            "object_id": oid,
            "view_index": plan.view_index,
            "entropies": list(plan.entropies),
            "best": {
                "u": u,
                "v": v,
                "rotation_rad": plan.best.rotation_rad,
                "width_m": plan.best.width_m,
                "quality": plan.best.quality,
            },
            "collision_free": plan.collision_free,
            "plane_side": plan.views[plan.view_index].camera.plane_side,
            "bins": plan.views[plan.view_index].bins,
            "map": {
                "quality": plan.grasp_map.quality.tolist(),
                "rotation": plan.grasp_map.rotation.tolist(),
                "width": plan.grasp_map.width.tolist(),
            },
        }

    app.state.store = store
    app.state.sessions = sessions
    return app
