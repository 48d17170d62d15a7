"""HTTP+JSON session service: one suspendable clustering run per session.

A session wraps the run engine's query generator. Human-oracle sessions
suspend at every weak same-cluster query and expose it as a ticket; simulated
sessions answer server-side with an oracle model and finish during creation.
Both paths execute the identical engine, so a scripted client answering with
ground truth reproduces the in-process run bit for bit.

All responses carry the schema-version field ``"v": 1``.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ssac.algorithm import Policy, QueryRequest, SearchVariant, SsacEngine, SsacParams, SsacResult
from ssac.datagen import GenConfig, GenerationError, generate
from ssac.geometry import Clustering, Dataset, DatasetFormatError, parse_dataset
from ssac.oracles import DIFFERENT, NOT_SURE, SAME, OracleModel, same_cluster_query
from ssac.rng import Stream, derive_seed

__all__ = ["create_app", "Session", "replay_answers"]

_ANSWERS = (SAME, NOT_SURE, DIFFERENT)


class GenSpec(BaseModel):
    n: int
    m: int
    k: int
    sigma_std: float
    gamma_min: float
    gamma_max: float
    seed: int = 0
    max_attempts: int = 10_000


class DatasetSpec(BaseModel):
    text: str | None = None
    gen: GenSpec | None = None


class ParamsSpec(BaseModel):
    k: int
    eta: float
    beta: int = 10
    delta: float = 0.1
    variant: str = "distance"
    policy: str = "treat_as_different"
    seed: int = 0


class OracleSpec(BaseModel):
    kind: str  # human | perfect | random | local | global
    q: float | None = None
    nu: float | None = None
    rho: float | None = None


class CreateRequest(BaseModel):
    dataset: DatasetSpec
    params: ParamsSpec
    oracle: OracleSpec
    allow_beta_probes: bool = False


class AnswerRequest(BaseModel):
    ticket: int
    answer: int


@dataclass
class TranscriptEntry:
    ticket: int
    x: int
    y: int
    answer: int

    def to_dict(self) -> dict:
        return {"ticket": self.ticket, "x": self.x, "y": self.y, "answer": self.answer}


class Session:
    """A single run: engine generator, pending ticket, transcript, final result."""

    def __init__(
        self,
        sid: str,
        dataset: Dataset,
        truth: Clustering | None,
        params: SsacParams,
        oracle: OracleModel | None,
        log_path: Path | None = None,
    ):
        self.id = sid
        self.dataset = dataset
        self.truth = truth
        self.params = params
        self.oracle = oracle  # None for human sessions
        self.lock = threading.Lock()
        self.engine = SsacEngine(dataset, params)
        self._gen = self.engine.run()
        self._oracle_rng = Stream(derive_seed(params.seed, "ssac-oracle"))
        self.pending: QueryRequest | None = None
        self.pending_ticket = 0
        self.transcript: list[TranscriptEntry] = []
        self.result: SsacResult | None = None
        self.status = "running"
        self._log_path = log_path
        if log_path is not None:
            self._log({"event": "created", "params": _params_dict(params)})

    # -- engine stepping ---------------------------------------------------

    def start(self) -> None:
        if self.oracle is None:
            self._advance(None)
        else:
            self._run_simulated()

    def _advance(self, answer: int | None) -> None:
        try:
            req = next(self._gen) if answer is None else self._gen.send(answer)
            self.pending = req
            self.pending_ticket += 1
            self.status = "awaiting_answer"
        except StopIteration as stop:
            self.result = stop.value
            self.pending = None
            self.status = "finished"
            if self._log_path is not None:
                self._log({"event": "finished"})

    def _run_simulated(self) -> None:
        try:
            req = next(self._gen)
            while True:
                ans = same_cluster_query(
                    self.oracle,
                    self.dataset.point(req.x),
                    self.dataset.point(req.y),
                    self._oracle_rng,
                )
                self.pending_ticket += 1
                self._record(self.pending_ticket, req, ans)
                req = self._gen.send(ans)
        except StopIteration as stop:
            self.result = stop.value
            self.status = "finished"
            if self._log_path is not None:
                self._log({"event": "finished"})

    def answer(self, ticket: int, answer: int) -> None:
        if self.status == "finished":
            raise HTTPException(status_code=409, detail="session already finished")
        if self.pending is None or ticket != self.pending_ticket:
            raise HTTPException(
                status_code=409,
                detail=f"ticket {ticket} is not pending (current: {self.pending_ticket})",
            )
        if answer not in _ANSWERS:
            raise HTTPException(status_code=400, detail="answer must be one of 1, 0, -1")
        req = self.pending
        self._record(self.pending_ticket, req, answer)
        self._advance(answer)

    def _record(self, ticket: int, req: QueryRequest, answer: int) -> None:
        self.transcript.append(TranscriptEntry(ticket=ticket, x=req.x, y=req.y, answer=answer))
        if self._log_path is not None:
            self._log({"event": "answer", "ticket": ticket, "x": req.x, "y": req.y, "answer": answer})

    def _log(self, record: dict) -> None:
        with self._log_path.open("a", encoding="ascii") as fh:
            fh.write(json.dumps(record) + "\n")

    # -- views ---------------------------------------------------------------

    def ticket_view(self) -> dict | None:
        if self.pending is None:
            return None
        px = self.dataset.point(self.pending.x)
        py = self.dataset.point(self.pending.y)
        return {
            "ticket": self.pending_ticket,
            "x": {"id": px.id, "coords": list(px.coords)},
            "y": {"id": py.id, "coords": list(py.coords)},
            "progress": {
                "iteration": self.pending.iteration,
                "k": self.params.k,
                "phase": self.pending.phase,
                "queries": self.pending.seq,
            },
        }

    def summary_view(self) -> dict | None:
        if self.result is None:
            return None
        summary = self.result.to_dict()
        sizes: dict[int, int] = {}
        for label in self.result.clustering.labels.values():
            sizes[label] = sizes.get(label, 0) + 1
        summary["cluster_sizes"] = sizes
        return summary

    def state_view(self) -> dict:
        view = {
            "status": self.status,
            "snapshot": self.engine.state.snapshot(self.engine.ctx),
        }
        if self.result is not None:
            view["summary"] = self.summary_view()
        return view


def _params_dict(params: SsacParams) -> dict:
    return {
        "k": params.k,
        "eta": params.eta,
        "beta": params.beta,
        "delta": params.delta,
        "variant": params.variant.value,
        "policy": params.policy.value,
        "seed": params.seed,
    }


def replay_answers(dataset: Dataset, params: SsacParams, answers: list[int]) -> SsacResult:
    """Re-run the engine feeding a recorded answer stream; returns the result.

    Raises if the stream is shorter than the run needs or answers are invalid.
    """
    engine = SsacEngine(dataset, params)
    gen = engine.run()
    try:
        next(gen)
    except StopIteration as stop:
        return stop.value
    idx = 0
    try:
        while True:
            if idx >= len(answers):
                raise ValueError("answer stream exhausted before the run finished")
            answer = answers[idx]
            idx += 1
            if answer not in _ANSWERS:
                raise ValueError(f"invalid recorded answer {answer!r}")
            gen.send(answer)
    except StopIteration as stop:
        return stop.value


def _build_params(spec: ParamsSpec) -> SsacParams:
    try:
        variant = SearchVariant(spec.variant)
        policy = Policy(spec.policy)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"unknown variant/policy: {exc}") from None
    try:
        return SsacParams(
            k=spec.k,
            eta=spec.eta,
            beta=spec.beta,
            delta=spec.delta,
            variant=variant,
            policy=policy,
            seed=spec.seed,
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def _build_dataset(spec: DatasetSpec) -> tuple[Dataset, Clustering | None]:
    if (spec.text is None) == (spec.gen is None):
        raise HTTPException(status_code=400, detail="provide exactly one of dataset.text or dataset.gen")
    if spec.text is not None:
        try:
            dataset, clustering = parse_dataset(spec.text)
        except DatasetFormatError as exc:
            raise HTTPException(status_code=400, detail=f"malformed dataset: {exc}") from None
        return dataset, clustering
    try:
        config = GenConfig(**spec.gen.model_dump())
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    try:
        dataset, truth, _ = generate(config)
    except GenerationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    return dataset, truth


def _build_oracle(
    spec: OracleSpec, dataset: Dataset, truth: Clustering | None
) -> OracleModel | None:
    if spec.kind == "human":
        return None
    if truth is None or not truth.is_ground_truth():
        raise HTTPException(
            status_code=400,
            detail="simulated oracles need a dataset with complete ground-truth labels",
        )
    try:
        return OracleModel(spec.kind, dataset, truth, q=spec.q, nu=spec.nu, rho=spec.rho)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def create_app(static_dir: str | None = None, transcript_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="ssac session service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()
    log_dir = Path(transcript_dir) if transcript_dir else None
    if log_dir is not None:
        log_dir.mkdir(parents=True, exist_ok=True)

    @app.exception_handler(HTTPException)
    async def _versioned_error(request: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"v": 1, "error": exc.detail})

    def _get(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return session

    @app.post("/sessions")
    def create_session(body: CreateRequest):
        params = _build_params(body.params)
        dataset, truth = _build_dataset(body.dataset)
        if params.k > len(dataset):
            raise HTTPException(status_code=400, detail="k exceeds the dataset size")
        oracle = _build_oracle(body.oracle, dataset, truth)
        if (
            oracle is None
            and params.variant is SearchVariant.RANDOM
            and not body.allow_beta_probes
        ):
            raise HTTPException(
                status_code=400,
                detail="human sessions use single-question probes (variant distance or "
                "unified); pass allow_beta_probes to override",
            )
        sid = secrets.token_hex(8)
        log_path = (log_dir / f"{sid}.jsonl") if log_dir is not None else None
        session = Session(sid, dataset, truth, params, oracle, log_path=log_path)
        with store_lock:
            sessions[sid] = session
        with session.lock:
            session.start()
            return {
                "v": 1,
                "id": sid,
                "status": session.status,
                "n": len(dataset),
                "k": params.k,
                "ticket": session.ticket_view(),
            }

    @app.get("/sessions/{sid}/next")
    def next_query(sid: str):
        session = _get(sid)
        with session.lock:
            if session.status == "finished":
                return {"v": 1, "status": "finished", "summary": session.summary_view()}
            return {"v": 1, "status": session.status, "ticket": session.ticket_view()}

    @app.post("/sessions/{sid}/answer")
    def post_answer(sid: str, body: AnswerRequest):
        session = _get(sid)
        with session.lock:
            session.answer(body.ticket, body.answer)
            response = {"v": 1, "status": session.status, "ticket": session.ticket_view()}
            if session.status == "finished":
                response["summary"] = session.summary_view()
            return response

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str):
        session = _get(sid)
        with session.lock:
            return {"v": 1, **session.state_view()}

    @app.get("/sessions/{sid}/transcript")
    def get_transcript(sid: str):
        session = _get(sid)
        with session.lock:
            return {"v": 1, "entries": [e.to_dict() for e in session.transcript]}

    @app.get("/sessions/{sid}/dataset")
    def get_dataset(sid: str):
        session = _get(sid)
        with session.lock:
            truth = session.truth
            points = [
                {
                    "id": p.id,
                    "coords": list(p.coords),
                    "label": truth.labels[p.id] if truth is not None else None,
                }
                for p in session.dataset.points
            ]
            return {
                "v": 1,
                "dim": session.dataset.dim,
                "k": session.params.k,
                "has_truth": truth is not None,
                "points": points,
            }

    if static_dir is not None:
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

        @app.get("/")
        def index():
            return RedirectResponse(url="/ui/")

    return app
