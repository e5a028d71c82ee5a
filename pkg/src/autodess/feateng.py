"""Stage-1 feature engineering: scaler -> (generation | decomposition) -> union -> selection."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .bayesopt import Categorical, ConfigurationSpace, optimize
from .classifiers import BaggedTrees, ClassifierSpec
from .dataio import Dataset, kfold_indices

logger = logging.getLogger(__name__)

SCALERS = ("none", "standard", "maxabs", "robust")
GENERATORS = ("none", "polynomial2", "kbins")
DECOMPOSITIONS = ("none", "pca", "truncated_svd")
SELECTORS = ("none", "variance", "percentile")
DECOMPOSITION_SIZES = (2, 4, 8)
VARIANCE_THRESHOLDS = (0.0, 0.01, 0.05)
PERCENTILES = (25, 50, 75)
KBINS = 5

SURROGATE = ClassifierSpec("bagged_trees", {"n": 25, "bootstrap": False, "max_depth": 8,
                                            "max_features": "sqrt", "splitter": "random"})


@dataclass(frozen=True)
class FeaturePipelineConfig:
    scaler: str = "none"
    generator: str = "none"
    decomposition: str = "none"
    n_components: int = 2
    selector: str = "none"
    variance_threshold: float = 0.0
    percentile: float = 50

    def __post_init__(self):
        if self.scaler not in SCALERS:
            raise ValueError(f"unknown scaler {self.scaler!r}")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.decomposition not in DECOMPOSITIONS:
            raise ValueError(f"unknown decomposition {self.decomposition!r}")
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.n_components < 1:
            raise ValueError("n_components must be at least 1")
        if not 0 < self.percentile <= 100:
            raise ValueError("percentile must lie in (0, 100]")
        if self.variance_threshold < 0:
            raise ValueError("variance threshold must be nonnegative")

    def to_dict(self) -> dict:
        """Four-slot record; parameters only for active slots."""
        dec = {"name": self.decomposition}
        if self.decomposition != "none":
            dec["n"] = self.n_components
        sel = {"name": self.selector}
        if self.selector == "variance":
            sel["threshold"] = self.variance_threshold
        elif self.selector == "percentile":
            sel["percentile"] = self.percentile
        return {"scaler": {"name": self.scaler}, "generator": {"name": self.generator},
                "decomposition": dec, "selector": sel}

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturePipelineConfig":
        dec = d["decomposition"]
        sel = d["selector"]
        return cls(d["scaler"]["name"], d["generator"]["name"], dec["name"], int(dec.get("n", 2)),
                   sel["name"], float(sel.get("threshold", 0.0)), float(sel.get("percentile", 50)))


IDENTITY = FeaturePipelineConfig()


# ----------------------------------------------------------------------- steps

@dataclass
class Scaler:
    kind: str
    center: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, kind: str, X: np.ndarray) -> "Scaler":
        d = X.shape[1]
        center = np.zeros(d)
        scale = np.ones(d)
        if kind == "standard":
            center = X.mean(axis=0)
            scale = X.std(axis=0)
        elif kind == "maxabs":
            scale = np.abs(X).max(axis=0) if len(X) else scale
        elif kind == "robust":
            center = np.median(X, axis=0)
            q75, q25 = np.percentile(X, [75, 25], axis=0)
            scale = q75 - q25
        scale = np.where(scale > 1e-12, scale, 1.0)
        return cls(kind, center, scale)

    def transform(self, X):
        return (X - self.center) / self.scale

    def inverse_transform(self, Z):
        return Z * self.scale + self.center


def polynomial2(X: np.ndarray) -> np.ndarray:
    """Degree-2 monomials without bias: originals, squares, then pairwise products."""
    d = X.shape[1]
    cols = [X, X ** 2]
    pairs = [X[:, i] * X[:, j] for i in range(d) for j in range(i + 1, d)]
    if pairs:
        cols.append(np.column_stack(pairs))
    return np.hstack(cols)


@dataclass
class KBins:
    edges: list[np.ndarray]

    @classmethod
    def fit(cls, X: np.ndarray, n_bins: int = KBINS) -> "KBins":
        qs = np.linspace(0, 100, n_bins + 1)[1:-1]
        return cls([np.unique(np.percentile(X[:, j], qs)) for j in range(X.shape[1])])

    def transform(self, X):
        return np.column_stack([np.searchsorted(e, X[:, j], side="right")
                                for j, e in enumerate(self.edges)]).astype(float) \
            if self.edges else np.zeros((len(X), 0))


@dataclass
class Decomposition:
    kind: str
    mean: np.ndarray
    components: np.ndarray  # n x d

    @classmethod
    def fit(cls, kind: str, X: np.ndarray, n: int) -> "Decomposition":
        limit = min(X.shape)
        if n > limit:
            logger.debug("%s: %d components requested, clamped to %d", kind, n, limit)
            n = limit
        mean = X.mean(axis=0) if kind == "pca" else np.zeros(X.shape[1])
        _, _, Vt = np.linalg.svd(X - mean, full_matrices=False)
        V = Vt[:n]
        # sign convention: largest-magnitude loading positive
        signs = np.sign(V[np.arange(len(V)), np.argmax(np.abs(V), axis=1)])
        signs[signs == 0] = 1.0
        return cls(kind, mean, V * signs[:, None])

    def transform(self, X):
        return (X - self.mean) @ self.components.T

    def inverse_transform(self, Z):
        return Z @ self.components + self.mean


def anova_f(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """One-way ANOVA F statistic per column; undefined values become 0."""
    classes = np.unique(y)
    n, k = len(y), len(classes)
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        ss_between += len(Xc) * (mc - grand) ** 2
        ss_within += np.sum((Xc - mc) ** 2, axis=0)
    df_b, df_w = k - 1, n - k
    with np.errstate(divide="ignore", invalid="ignore"):
        F = (ss_between / max(df_b, 1)) / (ss_within / max(df_w, 1))
    F[~np.isfinite(F)] = np.where(ss_between[~np.isfinite(F)] > 0, np.finfo(float).max, 0.0)
    return F


def select_columns(cfg: FeaturePipelineConfig, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    if cfg.selector == "none" or d == 0:
        return np.arange(d)
    if cfg.selector == "variance":
        var = X.var(axis=0)
        keep = np.flatnonzero(var > cfg.variance_threshold)
        return keep if len(keep) else np.array([int(np.argmax(var))])
    F = anova_f(X, y)
    n_keep = max(1, int(np.ceil(d * cfg.percentile / 100.0)))
    order = np.argsort(-F, kind="stable")
    return np.sort(order[:n_keep])


# ----------------------------------------------------------------------- pipeline

@dataclass
class FittedFeaturePipeline:
    config: FeaturePipelineConfig
    n_features_in: int
    scaler: Scaler
    kbins: KBins | None
    decomposition: Decomposition | None
    selected: np.ndarray
    union_width: int
    warnings: list[str] = field(default_factory=list)

    @property
    def n_features_out(self) -> int:
        return len(self.selected)

    def union(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in:
            raise ValueError(f"expected {self.n_features_in} columns, got {np.shape(X)}")
        S = self.scaler.transform(X)
        if self.config.generator == "polynomial2":
            A = polynomial2(S)
        elif self.config.generator == "kbins":
            A = self.kbins.transform(S)
        else:
            A = S
        if self.decomposition is not None:
            return np.hstack([A, self.decomposition.transform(S)])
        return A

    def transform(self, X) -> np.ndarray:
        return self.union(X)[:, self.selected]

    def transform_dataset(self, d: Dataset) -> Dataset:
        return Dataset(self.transform(d.X), d.y, d.class_count, [], d.index)


def fit_feature_pipeline(cfg: FeaturePipelineConfig, train: Dataset) -> FittedFeaturePipeline:
    X = train.X
    if train.n == 0:
        raise ValueError("cannot fit a feature pipeline on no data")
    warnings = []
    scaler = Scaler.fit(cfg.scaler, X)
    S = scaler.transform(X)
    kbins = KBins.fit(S) if cfg.generator == "kbins" else None
    dec = None
    if cfg.decomposition != "none":
        if cfg.n_components > min(S.shape):
            warnings.append(f"{cfg.decomposition} components clamped to {min(S.shape)}")
        dec = Decomposition.fit(cfg.decomposition, S, cfg.n_components)
    p = FittedFeaturePipeline(cfg, X.shape[1], scaler, kbins, dec, np.arange(0), 0, warnings)
    U = p.union(X)
    p.union_width = U.shape[1]
    p.selected = select_columns(cfg, U, train.y)
    return p


def transform(p: FittedFeaturePipeline, X) -> np.ndarray:
    return p.transform(X)


# ----------------------------------------------------------------------- search

def surrogate_score(cfg: FeaturePipelineConfig, train: Dataset, seed: int = 0,
                    folds: int = 5) -> float:
    """Stratified CV accuracy of the randomized-tree surrogate behind ``cfg``.

    The pipeline is refit inside every fold; a fold whose pipeline fails
    scores 0.
    """
    if train.n < 10:
        raise ValueError("surrogate scoring needs at least 10 samples")
    scores = []
    for tr, te in kfold_indices(train.n, folds, train.y, seed):
        part = train.subset(tr)
        try:
            p = fit_feature_pipeline(cfg, part)
            Xtr = p.transform(part.X)
            Xte = p.transform(train.X[te])
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("pipeline %s failed in fold: %s", cfg, exc)
            scores.append(0.0)
            continue
        model = BaggedTrees(SURROGATE, Xtr, part.y, train.class_count, seed)
        scores.append(float(np.mean(model.predict(Xte) == train.y[te])))
    return float(np.mean(scores))


SEARCH_SPACE = ConfigurationSpace([
    Categorical("scaler", SCALERS),
    Categorical("generator", GENERATORS),
    Categorical("decomposition", DECOMPOSITIONS),
    Categorical("n_components", DECOMPOSITION_SIZES),
    Categorical("selector", SELECTORS),
    Categorical("variance_threshold", VARIANCE_THRESHOLDS),
    Categorical("percentile", PERCENTILES),
])


def config_from_point(point: dict) -> FeaturePipelineConfig:
    return FeaturePipelineConfig(**point)


def identity_point() -> dict:
    d = asdict(IDENTITY)
    d["percentile"] = int(d["percentile"])
    return d


@dataclass
class FeatureSearchResult:
    config: FeaturePipelineConfig
    score: float
    history: list


def search_feature_pipeline(train: Dataset, budget: int, seed: int = 0,
                            deadline: float | None = None) -> FeatureSearchResult:
    """Minimize 1 - surrogate score over the slot space; identity goes first."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    cache: dict[FeaturePipelineConfig, float] = {}

    def objective(point):
        cfg = canonical(config_from_point(point))
        if cfg not in cache:
            cache[cfg] = 1.0 - surrogate_score(cfg, train, seed)
        return cache[cfg]

    res = optimize(SEARCH_SPACE, objective, budget, seed=seed, initial=[identity_point()],
                   deadline=deadline)
    return FeatureSearchResult(canonical(config_from_point(res.best_config)),
                               1.0 - res.best_value, res.history)


def canonical(cfg: FeaturePipelineConfig) -> FeaturePipelineConfig:
    """Reset parameters of inactive slots so equivalent configs compare equal."""
    return FeaturePipelineConfig(
        cfg.scaler, cfg.generator, cfg.decomposition,
        cfg.n_components if cfg.decomposition != "none" else 2,
        cfg.selector,
        cfg.variance_threshold if cfg.selector == "variance" else 0.0,
        cfg.percentile if cfg.selector == "percentile" else 50,
    )
