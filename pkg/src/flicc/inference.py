"""Load a trained artifact and serve predictions over CLI and HTTP.

The loaded model is immutable; request handling never mutates shared state,
and identical request bodies produce identical responses.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from pydantic import BaseModel

from .errors import ArtifactCorrupt, BindFailure, EmptyText, VersionMismatch
from .taxonomy import FallacyLabel, canonical_names, parse_label, taxonomy_payload

ARTIFACT_SCHEMA = 1


class PredictBody(BaseModel):
    text: str


@dataclass(frozen=True)
class Prediction:
    label: FallacyLabel
    scores: dict  # canonical label name -> probability
    model_version: str
    input_hash: str

    def to_json_dict(self) -> dict:
        return {
            "label": self.label.canonical_name,
            "scores": self.scores,
            "model_version": self.model_version,
            "input_hash": self.input_hash,
        }


class Predictor:
    def __init__(self, model, tokenizer, model_version: str, max_length: int):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.model_version = model_version
        self.max_length = max_length
        self._names = canonical_names()

    def predict(self, text: str) -> Prediction:
        """Classify one text; deterministic for a fixed artifact.

        Over-length inputs are truncated to the artifact's training-time
        maximum, mirroring training to avoid train/serve skew.
        """
        import torch

        if not text or not text.strip():
            raise EmptyText("cannot classify empty text")
        limit = min(self.max_length, getattr(self.tokenizer, "model_max_length", self.max_length))
        enc = self.tokenizer(
            [text],
            return_tensors="pt",
            padding="max_length",
            truncation=True,
            max_length=limit,
        )
        with torch.no_grad():
            logits = self.model(**enc).logits[0]
            probs = torch.softmax(logits, dim=-1).tolist()
        best = max(range(len(probs)), key=lambda i: (probs[i], -i))
        return Prediction(
            label=parse_label(self._names[best]),
            scores={name: float(p) for name, p in zip(self._names, probs)},
            model_version=self.model_version,
            input_hash=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        )

    def predict_batch(self, texts: Sequence[str]) -> list[Prediction]:
        """Order-preserving, elementwise identical to repeated predict()."""
        out = []
        for i, text in enumerate(texts):
            try:
                out.append(self.predict(text))
            except EmptyText as exc:
                raise EmptyText(f"text at index {i}: {exc}") from exc
        return out


def load_predictor(artifact_path: str | Path) -> Predictor:
    """Load an artifact directory produced by the training module."""
    import torch  # noqa: F401  (transformers needs torch available)
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    from .checkpoints import quiet_transformers

    quiet_transformers()
    artifact_path = Path(artifact_path)
    config_path = artifact_path / "config.json"
    model_dir = artifact_path / "model"
    if not config_path.is_file() or not model_dir.is_dir():
        raise ArtifactCorrupt(f"{artifact_path} is not a run directory")
    try:
        snapshot = json.loads(config_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactCorrupt(f"unreadable config snapshot: {exc}") from exc
    if snapshot.get("artifact_schema") != ARTIFACT_SCHEMA:
        raise VersionMismatch(
            f"artifact schema {snapshot.get('artifact_schema')!r}, expected {ARTIFACT_SCHEMA}"
        )
    if snapshot.get("labels") != list(canonical_names()):
        raise VersionMismatch("artifact label order does not match the taxonomy")
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_dir)
        model = AutoModelForSequenceClassification.from_pretrained(model_dir)
    except Exception as exc:
        raise ArtifactCorrupt(f"cannot load model from {model_dir}: {exc}") from exc
    return Predictor(
        model=model,
        tokenizer=tokenizer,
        model_version=snapshot["model_version"],
        max_length=snapshot.get("max_length", 128),
    )


def create_app(predictor: Predictor, cors_origins: Sequence[str] = ("*",)):
    """HTTP JSON API over a loaded predictor."""
    from fastapi import FastAPI
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="flicc fallacy classifier", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health():
        return {"status": "ok", "model_version": predictor.model_version}

    @app.get("/labels")
    def labels():
        return taxonomy_payload()

    @app.post("/predict")
    def predict(body: PredictBody):
        try:
            prediction = predictor.predict(body.text)
        except EmptyText as exc:
            return JSONResponse(status_code=400, content={"error": "EmptyText", "detail": str(exc)})
        return prediction.to_json_dict()

    return app


def serve(predictor: Predictor, host: str = "127.0.0.1", port: int = 8000,
          cors_origins: Sequence[str] = ("*",)) -> None:
    """Run the HTTP service until interrupted."""
    import uvicorn

    app = create_app(predictor, cors_origins=cors_origins)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
