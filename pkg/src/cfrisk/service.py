"""HTTP API for the annotation workbench.

Endpoints: POST /sessions, GET /sessions/{id}/document,
POST /sessions/{id}/counterfactuals, POST /sessions/{id}/ratings,
GET /risk, POST /models, POST /datasets, GET /export. Every mutation is
persisted before the response returns; malformed payloads get
structured {"code", "message"} bodies.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import uuid
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from datetime import datetime, timezone
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import risk as risk_mod
from .core import (
    GenerationConfig,
    Instance,
    NotFoundError,
    Rating,
    ValidationError,
    WorkbenchError,
)
from .engine import generate_trail, replay_trail
from .mlm import PromptTemplate
from .models import AssessedModel, FillModel, resolve_filler, resolve_model
from .rationale import instance_from_record, merge_custom, rationale_sentences
from .store import Session, Store

log = logging.getLogger(__name__)

STATUS_BY_CODE = {"invalid": 400, "not_found": 404, "capability": 409, "timeout": 504}


class SessionRequest(BaseModel):
    annotator_id: str
    model_id: str
    dataset_id: str
    seed: int | None = None


class GenerateRequest(BaseModel):
    sentence_index: int
    method: str = "hotflip"
    custom_mask: list[int] | None = None
    max_steps: int | None = None
    top_p_positions: int | None = None
    beam_width: int | None = None
    filler_id: str | None = None


class RateRequest(BaseModel):
    trail_id: str
    plausibility: int
    meaningfulness: int
    faithfulness: int


class ModelRequest(BaseModel):
    kind: str
    role: str = "assessed"
    weights: dict[str, Any] | str | None = None


class AppState:
    """Mutable service state: the store plus live adapter instances."""

    def __init__(self, store: Store, defaults: GenerationConfig, template: PromptTemplate,
                 generation_timeout: float = 30.0) -> None:
        self.store = store
        self.defaults = defaults
        self.template = template
        self.generation_timeout = generation_timeout
        self.models: dict[str, AssessedModel] = {}
        self.fillers: dict[str, FillModel] = {}
        self.instances: dict[str, Any] = {}  # session_id -> materialized Instance
        self.executor = ThreadPoolExecutor(max_workers=4)
        for model_id in store.model_ids():
            try:
                self._instantiate(model_id, store.model_descriptor(model_id))
            except WorkbenchError as exc:
                log.warning("could not restore model %s: %s", model_id, exc)

    def _instantiate(self, model_id: str, descriptor: dict[str, Any]) -> None:
        if descriptor.get("role") == "filler":
            self.fillers[model_id] = resolve_filler(descriptor["kind"])
        else:
            self.models[model_id] = resolve_model(descriptor)

    def register(self, descriptor: dict[str, Any]) -> str:
        digest = hashlib.sha256(
            json.dumps(descriptor, sort_keys=True, default=str).encode()
        ).hexdigest()[:12]
        model_id = f"m-{digest}"
        self._instantiate(model_id, descriptor)
        self.store.register_model(model_id, descriptor)
        return model_id

    def model(self, model_id: str) -> AssessedModel:
        if model_id not in self.models:
            raise NotFoundError(f"unknown model {model_id!r}")
        return self.models[model_id]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def create_app(
    data_dir: str,
    defaults: GenerationConfig | None = None,
    prompt_template: str | None = None,
    generation_timeout: float = 30.0,
    ui_dir: str | None = None,
) -> FastAPI:
    store = Store(data_dir)
    template = PromptTemplate(text=prompt_template) if prompt_template else PromptTemplate()
    state = AppState(store, defaults or GenerationConfig(), template, generation_timeout)
    app = FastAPI(title="cfrisk")
    app.state.workbench = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(WorkbenchError)
    async def workbench_error(_: Request, exc: WorkbenchError) -> JSONResponse:
        return JSONResponse(
            status_code=STATUS_BY_CODE.get(exc.code, 400),
            content={"code": exc.code, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def payload_error(_: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"code": "invalid", "message": str(exc)})

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/models")
    def upload_model(req: ModelRequest) -> dict[str, str]:
        descriptor: dict[str, Any] = {"kind": req.kind, "role": req.role}
        if req.weights is not None:
            descriptor["weights"] = req.weights
        return {"model_id": state.register(descriptor)}

    @app.post("/datasets")
    async def upload_dataset(request: Request) -> dict[str, Any]:
        body = await request.body()
        if not body:
            raise ValidationError("empty dataset upload")
        dataset_id = store.ingest_dataset(body)
        dataset = store.get_dataset(dataset_id)
        return {
            "dataset_id": dataset_id,
            "records": len(dataset.records),
            "labels": list(dataset.label_vocab),
        }

    @app.post("/sessions")
    def create_session(req: SessionRequest) -> dict[str, Any]:
        model = state.model(req.model_id)
        dataset = store.get_dataset(req.dataset_id)
        seed = req.seed if req.seed is not None else random.randrange(2**31)
        rng = random.Random(seed)
        record = rng.choice(dataset.records)
        instance = instance_from_record(record, model)
        session = Session(
            session_id=f"s-{uuid.uuid4().hex[:12]}",
            annotator_id=req.annotator_id,
            model_id=req.model_id,
            dataset_id=req.dataset_id,
            created_at=_now(),
            instance_id=record.id,
            seed=seed,
        )
        store.save_session(session)
        state.instances[session.session_id] = instance
        return session.to_dict()

    def _session_instance(session_id: str):
        session = store.get_session(session_id)
        if session_id not in state.instances:
            record = store.get_dataset(session.dataset_id).get_record(session.instance_id)
            state.instances[session_id] = instance_from_record(
                record, state.model(session.model_id)
            )
        return session, state.instances[session_id]

    @app.get("/sessions/{session_id}/document")
    def get_document(session_id: str, expand: bool = False) -> dict[str, Any]:
        session, instance = _session_instance(session_id)
        eligible = rationale_sentences(instance)
        return {
            "session_id": session_id,
            "instance_id": instance.id,
            "tokens": list(instance.document.tokens),
            "mask": list(instance.mask.bits),
            "sentence_spans": [list(s) for s in instance.sentence_spans],
            "rationale_sentences": eligible,
            "visible_sentences": list(range(len(instance.sentence_spans))) if expand else eligible,
            "expanded": expand,
            "gold_label": instance.gold_label,
        }

    @app.post("/sessions/{session_id}/counterfactuals")
    def generate(session_id: str, req: GenerateRequest) -> dict[str, Any]:
        session, instance = _session_instance(session_id)
        model = state.model(session.model_id)
        if not 0 <= req.sentence_index < len(instance.sentence_spans):
            raise ValidationError(f"no sentence {req.sentence_index} in this document")
        if req.custom_mask is not None:
            start, end = instance.sentence_spans[req.sentence_index]
            outside = [i for i in req.custom_mask if not start <= i < end]
            if outside:
                raise ValidationError(
                    f"custom mask positions {outside} outside sentence {req.sentence_index}"
                )
            instance = Instance(
                id=instance.id,
                document=instance.document,
                sentence_spans=instance.sentence_spans,
                mask=merge_custom(instance.mask, req.custom_mask),
                gold_label=instance.gold_label,
            )
        config = GenerationConfig(
            method=req.method,
            max_steps=req.max_steps or state.defaults.max_steps,
            top_p_positions=req.top_p_positions or state.defaults.top_p_positions,
            beam_width=req.beam_width or state.defaults.beam_width,
            fill_top_k=state.defaults.fill_top_k,
            prediction_scope=state.defaults.prediction_scope,
        )
        filler = None
        if config.method == "mlm":
            if req.filler_id is not None:
                if req.filler_id not in state.fillers:
                    raise NotFoundError(f"unknown filler {req.filler_id!r}")
                filler = state.fillers[req.filler_id]
            else:
                filler = state.fillers.get(session.dataset_id)
                if filler is None:
                    dataset = store.get_dataset(session.dataset_id)
                    filler = resolve_filler("ref:filler", corpus=dataset.corpus())
                    state.fillers[session.dataset_id] = filler

        future = state.executor.submit(
            generate_trail,
            instance,
            req.sentence_index,
            config,
            model,
            filler,
            state.template,
            session.model_id,
            session.seed,
        )
        try:
            trail = future.result(timeout=state.generation_timeout)
        except FutureTimeout:
            err = WorkbenchError(f"generation exceeded {state.generation_timeout}s")
            err.code = "timeout"
            raise err from None
        store.save_trail(trail)
        store.attach_trail(session_id, trail.trail_id)
        start, end = instance.sentence_spans[trail.sentence_index]
        return {
            "trail": trail.to_dict(),
            "sentence_span": [start, end],
            "sentence_tokens": list(instance.document.tokens[start:end]),
            "counterfactual_tokens": list(replay_trail(instance, trail).tokens),
        }

    @app.post("/sessions/{session_id}/ratings")
    def rate(session_id: str, req: RateRequest) -> dict[str, str]:
        session = store.get_session(session_id)
        if req.trail_id not in session.trail_ids:
            raise ValidationError(f"trail {req.trail_id!r} does not belong to this session")
        rating = Rating(
            rating_id=store.next_rating_id(),
            trail_id=req.trail_id,
            annotator_id=session.annotator_id,
            plausibility=req.plausibility,
            meaningfulness=req.meaningfulness,
            faithfulness=req.faithfulness,
            timestamp=_now(),
        )
        store.save_rating(rating)
        return {"rating_id": rating.rating_id}

    @app.get("/risk")
    def risk(
        model_id: str = Query(...),
        instance_id: str | None = None,
        min_plausibility: int | None = None,
    ) -> dict[str, Any]:
        return risk_mod.risk_report(store, model_id, instance_id, min_plausibility).to_dict()

    @app.get("/export")
    def export(
        min_plausibility: int | None = None,
        min_meaningfulness: int | None = None,
        flipped_only: bool = False,
    ) -> StreamingResponse:
        def stream():
            for record in store.export_counterfactuals(
                min_plausibility, min_meaningfulness, flipped_only
            ):
                yield json.dumps(record) + "\n"

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app
