"""FastAPI service wrapping the core pipeline: model inference, descriptor
extraction, synthetic data generation, and desk-scale training/evaluation."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import classifier
from ..config import ExperimentConfig
from ..errors import BscpError
from ..evaluate import render_report, run_protocol, train_full
from ..mask import load_mask
from ..model_io import load_model, save_model
from ..pipeline import encode_shape, extract_features
from ..synthetic import write_dataset
from . import schemas


def create_app(model_path: str | None = None) -> FastAPI:
    app = FastAPI(title="bscp shape classification service")
    app.state.bundle = load_model(model_path) if model_path else None

    def bundle_or_503():
        if app.state.bundle is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        return app.state.bundle

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", model_loaded=app.state.bundle is not None)

    @app.post("/model/load", response_model=schemas.ModelInfoResponse)
    def model_load(req: schemas.LoadModelRequest):
        try:
            app.state.bundle = load_model(req.path)
        except (BscpError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return model_info()

    @app.get("/model/info", response_model=schemas.ModelInfoResponse)
    def model_info():
        b = bundle_or_503()
        cfg = b.config
        return schemas.ModelInfoResponse(
            classes=b.svm.class_labels, codebook_size=b.codebook.size,
            descriptor_dim=cfg.descriptor_dim, pooled_dim=cfg.pooled_dim,
            contour_points=cfg.contour_points, dce_vertices=cfg.dce_vertices,
            part_samples=cfg.part_samples, ref_points=cfg.ref_points,
            dist_bins=cfg.dist_bins, orient_bins=cfg.orient_bins,
            thick_bins=cfg.thick_bins, llc_neighbors=cfg.llc_neighbors)

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest):
        b = bundle_or_503()
        try:
            feats = extract_features(load_mask(req.mask_path), b.config, geom=b.geometry)
            vec = encode_shape(feats, b.codebook, b.config.llc_neighbors)
        except BscpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        scores = classifier.decision_scores(b.svm, vec)
        idx = classifier.predict(b.svm, vec)
        return schemas.PredictResponse(
            label=b.svm.class_labels[idx],
            scores={name: float(s) for name, s in zip(b.svm.class_labels, scores)})

    @app.post("/extract", response_model=schemas.ExtractResponse)
    def extract(req: schemas.ExtractRequest):
        b = app.state.bundle
        cfg = b.config if b else ExperimentConfig()
        geom = b.geometry if b else None
        try:
            feats = extract_features(load_mask(req.mask_path), cfg, geom=geom)
        except BscpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        out = None
        if req.out_path:
            from ..cli import write_descriptor_dump

            write_descriptor_dump(Path(req.out_path), feats)
            out = req.out_path
        parts = [schemas.PartMeta(start_index=int(i), end_index=int(j),
                                  median_x=float(x), median_y=float(y))
                 for (i, j), (x, y) in zip(feats.pairs, feats.positions)]
        return schemas.ExtractResponse(n_parts=feats.n_parts,
                                       dim=feats.descriptors.shape[1],
                                       parts=parts, out_path=out)

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest):
        try:
            written = write_dataset(req.out_dir, variant=req.variant,
                                    per_class=req.per_class, seed=req.seed)
        except BscpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.SynthResponse(classes=written)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        try:
            cfg = ExperimentConfig().with_overrides(**req.config)
            bundle = train_full(req.data_dir, cfg, seed=req.seed)
            save_model(bundle, req.out_model)
        except BscpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        app.state.bundle = bundle
        n_shapes = sum(1 for cdir in Path(req.data_dir).iterdir() if cdir.is_dir()
                       for _ in cdir.glob("*.png"))
        return schemas.TrainResponse(model_path=req.out_model,
                                     classes=bundle.svm.class_labels, n_shapes=n_shapes)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        try:
            cfg = ExperimentConfig().with_overrides(protocol=req.protocol, **req.config)
            report = run_protocol(req.data_dir, cfg)
        except BscpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return schemas.EvalResponse(protocol=report.protocol,
                                    classes=report.class_names,
                                    accuracies=report.accuracies,
                                    mean_accuracy=report.mean_accuracy,
                                    std_accuracy=report.std_accuracy,
                                    report_text=render_report(report))

    return app


app = create_app()
