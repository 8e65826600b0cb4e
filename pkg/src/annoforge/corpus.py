"""Corpus data model, shard I/O, synthetic generation, and dedup-aware splits.

A corpus is stored columnar: per-record metadata (id, annotations, interest
ids) lives in JSONL shards, bulk float payloads (embeddings, pixels) live in
sidecar binary shards aligned by record order.

On-disk layout of a corpus directory::

    manifest.json            shard names, counts, dims
    corpus.jsonl             {"id","ann","ints"} per line (corpus.00000.jsonl when sharded)
    corpus.emb               AEMB header + float32 embeddings
    corpus.pix               APIX header + float32 pixel grids (optional)
    classes.jsonl            {"id","class"} ground-truth sidecar (synthetic corpora only)
"""

from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    ShardFormatError,
    ValidationError,
)
from .seeding import rng_for

EMB_MAGIC = b"AEMB"
PIX_MAGIC = b"APIX"
GEN_CHUNK = 2048  # fixed work unit so output is independent of worker count


# ----------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------

@dataclass
class ContentRecord:
    """One image-like item: weak annotations, interests, and payloads."""

    id: str
    annotations: list[tuple[int, float]]
    interests: frozenset[int]
    embedding: np.ndarray
    pixels: np.ndarray | None = None


@dataclass
class TermRecord:
    """One dictionary term with its text embedding and filter flags."""

    term_id: int
    surface: str
    text_embedding: np.ndarray
    canonical: bool = True
    sensitive: bool = False
    language: str = "en"


@dataclass(frozen=True)
class InterestTaxonomy:
    """Top-level interest categories; ids are contiguous from 0."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        ids = [i for i, _ in self.entries]
        names = [n for _, n in self.entries]
        if ids != list(range(len(ids))):
            raise ValidationError("interest ids must be contiguous from 0")
        if len(set(names)) != len(names):
            raise ValidationError("interest names must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[int]:
        return [i for i, _ in self.entries]

    @classmethod
    def default(cls) -> "InterestTaxonomy":
        names = [
            "animals", "architecture", "art", "beauty", "cars", "crafts",
            "design", "diy", "education", "electronics", "entertainment",
            "fashion", "finance", "fitness", "food", "gardening", "health",
            "history", "home-decor", "music", "nature", "sports", "travel",
            "weddings",
        ]
        return cls(tuple(enumerate(names)))


@dataclass
class SyntheticSpec:
    """Parameters for the planted-class synthetic corpus generator."""

    n_items: int
    n_classes: int
    zipf_exponent: float = 1.0
    noise_scale: float = 0.5
    embedding_dim: int = 64
    annotation_noise_rate: float = 0.0
    seed: int = 0
    image_size: int = 0  # 0 = no pixel payloads
    pixel_noise: float = 0.05

    def validate(self) -> None:
        if self.n_items < 0 or self.n_classes < 2:
            raise ValidationError("need n_items >= 0 and n_classes >= 2")
        if self.zipf_exponent <= 0:
            raise ValidationError("zipf_exponent must be > 0")
        if self.noise_scale < 0 or self.pixel_noise < 0:
            raise ValidationError("noise scales must be >= 0")
        if not 0.0 <= self.annotation_noise_rate <= 1.0:
            raise ValidationError("annotation_noise_rate must be in [0,1]")
        if self.embedding_dim <= 0:
            raise ValidationError("embedding_dim must be positive")


class Corpus:
    """Columnar record store; embeddings/pixels are shared arrays."""

    def __init__(
        self,
        ids: list[str],
        annotations: list[list[tuple[int, float]]],
        interests: list[frozenset[int]],
        embeddings: np.ndarray,
        pixels: np.ndarray | None = None,
        latent_classes: np.ndarray | None = None,
    ) -> None:
        self.ids = ids
        self.annotations = annotations
        self.interests = interests
        self.embeddings = np.asarray(embeddings, dtype=np.float32)
        self.pixels = None if pixels is None else np.asarray(pixels, dtype=np.float32)
        self.latent_classes = (
            None if latent_classes is None else np.asarray(latent_classes, dtype=np.int64)
        )
        self._id_index: dict[str, int] | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def record(self, i: int) -> ContentRecord:
        return ContentRecord(
            id=self.ids[i],
            annotations=self.annotations[i],
            interests=self.interests[i],
            embedding=self.embeddings[i],
            pixels=None if self.pixels is None else self.pixels[i],
        )

    def records(self) -> Iterator[ContentRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def id_index(self) -> dict[str, int]:
        if self._id_index is None:
            self._id_index = {cid: i for i, cid in enumerate(self.ids)}
        return self._id_index

    def subset(self, indices: Sequence[int]) -> "Corpus":
        idx = list(indices)
        return Corpus(
            ids=[self.ids[i] for i in idx],
            annotations=[self.annotations[i] for i in idx],
            interests=[self.interests[i] for i in idx],
            embeddings=self.embeddings[idx] if len(self) else self.embeddings,
            pixels=None if self.pixels is None else self.pixels[idx],
            latent_classes=None if self.latent_classes is None else self.latent_classes[idx],
        )

    def validate(self, taxonomy: InterestTaxonomy | None = None) -> None:
        n = len(self.ids)
        if len(self.annotations) != n or len(self.interests) != n:
            raise ValidationError("column lengths disagree")
        if self.embeddings.shape[0] != n:
            raise ValidationError("embedding row count disagrees with ids")
        if len(set(self.ids)) != n:
            raise DuplicateIdError("duplicate record ids")
        for anns in self.annotations:
            for _, conf in anns:
                if not 0.0 <= conf <= 1.0:
                    raise ValidationError(f"confidence out of [0,1]: {conf}")
        if taxonomy is not None:
            valid = set(taxonomy.ids)
            for ints in self.interests:
                if not ints <= valid:
                    raise ValidationError(f"interest ids outside taxonomy: {sorted(ints - valid)}")

    @classmethod
    def from_records(
        cls, records: Sequence[ContentRecord], latent_classes: np.ndarray | None = None
    ) -> "Corpus":
        if not records:
            return cls([], [], [], np.zeros((0, 0), dtype=np.float32))
        emb = np.stack([r.embedding for r in records]).astype(np.float32)
        pix = None
        if records[0].pixels is not None:
            pix = np.stack([r.pixels for r in records]).astype(np.float32)
        return cls(
            ids=[r.id for r in records],
            annotations=[list(r.annotations) for r in records],
            interests=[frozenset(r.interests) for r in records],
            embeddings=emb,
            pixels=pix,
            latent_classes=latent_classes,
        )


# ----------------------------------------------------------------------
# Shard I/O
# ----------------------------------------------------------------------

def _write_emb_shard(path: Path, data: np.ndarray) -> None:
    count, dim = data.shape
    with open(path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<IIQ", 1, dim, count))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def _read_emb_shard(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != EMB_MAGIC:
            raise ShardFormatError(f"{path}: bad embedding magic {magic!r}")
        version, dim, count = struct.unpack("<IIQ", f.read(16))
        if version != 1:
            raise ShardFormatError(f"{path}: unsupported embedding version {version}")
        data = np.frombuffer(f.read(4 * dim * count), dtype="<f4")
    if data.size != dim * count:
        raise ShardFormatError(f"{path}: truncated embedding payload")
    return data.reshape(count, dim).astype(np.float32)


def _write_pix_shard(path: Path, data: np.ndarray) -> None:
    count, h, w, _ = data.shape
    with open(path, "wb") as f:
        f.write(PIX_MAGIC)
        f.write(struct.pack("<IIIQ", 1, h, w, count))
        f.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def _read_pix_shard(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != PIX_MAGIC:
            raise ShardFormatError(f"{path}: bad pixel magic {magic!r}")
        version, h, w, count = struct.unpack("<IIIQ", f.read(20))
        if version != 1:
            raise ShardFormatError(f"{path}: unsupported pixel version {version}")
        data = np.frombuffer(f.read(4 * h * w * 3 * count), dtype="<f4")
    if data.size != h * w * 3 * count:
        raise ShardFormatError(f"{path}: truncated pixel payload")
    return data.reshape(count, h, w, 3).astype(np.float32)


def _record_line(cid: str, anns: list[tuple[int, float]], ints: frozenset[int]) -> str:
    obj = {
        "id": cid,
        "ann": [[int(t), float(c)] for t, c in anns],
        "ints": sorted(int(i) for i in ints),
    }
    return json.dumps(obj, separators=(",", ":"))


def write_corpus(corpus: Corpus, path: str | Path, shard_size: int | None = None) -> None:
    """Write a corpus directory; one shard when ``shard_size`` is None."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    n = len(corpus)
    if shard_size is None or shard_size >= max(n, 1):
        bounds = [(0, n)] if n else []
    else:
        if shard_size <= 0:
            raise ValidationError("shard_size must be positive")
        bounds = [(lo, min(n, lo + shard_size)) for lo in range(0, n, shard_size)]

    single = len(bounds) == 1
    names = []
    for s, (lo, hi) in enumerate(bounds):
        stem = "corpus" if single else f"corpus.{s:05d}"
        names.append(stem)
        with open(out / f"{stem}.jsonl", "w", encoding="utf-8") as f:
            for i in range(lo, hi):
                f.write(_record_line(corpus.ids[i], corpus.annotations[i], corpus.interests[i]))
                f.write("\n")
        _write_emb_shard(out / f"{stem}.emb", corpus.embeddings[lo:hi])
        if corpus.pixels is not None:
            _write_pix_shard(out / f"{stem}.pix", corpus.pixels[lo:hi])

    if corpus.latent_classes is not None:
        with open(out / "classes.jsonl", "w", encoding="utf-8") as f:
            for cid, cls in zip(corpus.ids, corpus.latent_classes):
                f.write(json.dumps({"id": cid, "class": int(cls)}, separators=(",", ":")))
                f.write("\n")

    manifest = {
        "kind": "corpus",
        "version": 1,
        "count": n,
        "dim": int(corpus.embeddings.shape[1]) if corpus.embeddings.ndim == 2 else 0,
        "shards": names,
        "shard_counts": [hi - lo for lo, hi in bounds],
        "has_pixels": corpus.pixels is not None,
        "image_hw": list(corpus.pixels.shape[1:3]) if corpus.pixels is not None else None,
        "has_classes": corpus.latent_classes is not None,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def read_shard(
    directory: Path, stem: str, has_pixels: bool
) -> tuple[list[str], list[list[tuple[int, float]]], list[frozenset[int]], np.ndarray, np.ndarray | None]:
    """Read one self-contained shard; shards may be read in any order."""
    ids: list[str] = []
    anns: list[list[tuple[int, float]]] = []
    ints: list[frozenset[int]] = []
    with open(directory / f"{stem}.jsonl", encoding="utf-8") as f:
        for line in f:
            obj = json.loads(line)
            ids.append(obj["id"])
            anns.append([(int(t), float(c)) for t, c in obj["ann"]])
            ints.append(frozenset(int(i) for i in obj["ints"]))
    emb = _read_emb_shard(directory / f"{stem}.emb")
    if emb.shape[0] != len(ids):
        raise ShardFormatError(f"{stem}: embedding count {emb.shape[0]} != record count {len(ids)}")
    pix = _read_pix_shard(directory / f"{stem}.pix") if has_pixels else None
    if pix is not None and pix.shape[0] != len(ids):
        raise ShardFormatError(f"{stem}: pixel count {pix.shape[0]} != record count {len(ids)}")
    return ids, anns, ints, emb, pix


def read_corpus(path: str | Path) -> Corpus:
    """Read a corpus directory written by :func:`write_corpus`."""
    directory = Path(path)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ShardFormatError(f"missing manifest: {manifest_path}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)
    if manifest.get("kind") != "corpus":
        raise ShardFormatError(f"{manifest_path}: not a corpus manifest")

    ids: list[str] = []
    anns: list[list[tuple[int, float]]] = []
    ints: list[frozenset[int]] = []
    embs: list[np.ndarray] = []
    pixs: list[np.ndarray] = []
    dim: int | None = None
    for stem in manifest["shards"]:
        s_ids, s_anns, s_ints, s_emb, s_pix = read_shard(directory, stem, manifest["has_pixels"])
        if dim is None:
            dim = s_emb.shape[1]
        elif s_emb.shape[1] != dim:
            raise DimensionMismatchError(
                f"{stem}: embedding dim {s_emb.shape[1]} != {dim} of earlier shards"
            )
        ids.extend(s_ids)
        anns.extend(s_anns)
        ints.extend(s_ints)
        embs.append(s_emb)
        if s_pix is not None:
            pixs.append(s_pix)

    if len(set(ids)) != len(ids):
        raise DuplicateIdError("duplicate record ids across shards")
    if dim is None:
        dim = manifest.get("dim", 0)
        embs = [np.zeros((0, dim), dtype=np.float32)]

    latent = None
    classes_path = directory / "classes.jsonl"
    if classes_path.exists():
        by_id = {}
        with open(classes_path, encoding="utf-8") as f:
            for line in f:
                obj = json.loads(line)
                by_id[obj["id"]] = obj["class"]
        latent = np.array([by_id[cid] for cid in ids], dtype=np.int64)

    return Corpus(
        ids=ids,
        annotations=anns,
        interests=ints,
        embeddings=np.concatenate(embs, axis=0) if embs else np.zeros((0, dim), dtype=np.float32),
        pixels=np.concatenate(pixs, axis=0) if pixs else None,
        latent_classes=latent,
    )


def corpus_content_hash(corpus: Corpus) -> str:
    """SHA-256 over the canonical serialized form (order-sensitive)."""
    h = hashlib.sha256()
    for i in range(len(corpus)):
        h.update(_record_line(corpus.ids[i], corpus.annotations[i], corpus.interests[i]).encode())
        h.update(b"\n")
    h.update(np.ascontiguousarray(corpus.embeddings, dtype="<f4").tobytes())
    if corpus.pixels is not None:
        h.update(np.ascontiguousarray(corpus.pixels, dtype="<f4").tobytes())
    return h.hexdigest()


# ----------------------------------------------------------------------
# Term dictionary I/O
# ----------------------------------------------------------------------

def write_terms(terms: Sequence[TermRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in terms:
            obj = {
                "tid": t.term_id,
                "s": t.surface,
                "emb": [float(x) for x in np.asarray(t.text_embedding, dtype=np.float64)],
                "canon": t.canonical,
                "sens": t.sensitive,
                "lang": t.language,
            }
            f.write(json.dumps(obj, separators=(",", ":")))
            f.write("\n")


def read_terms(path: str | Path) -> list[TermRecord]:
    terms = []
    dim = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            obj = json.loads(line)
            emb = np.array(obj["emb"], dtype=np.float64)
            if dim is None:
                dim = emb.size
            elif emb.size != dim:
                raise DimensionMismatchError(f"term {obj['tid']}: text dim {emb.size} != {dim}")
            terms.append(
                TermRecord(
                    term_id=int(obj["tid"]),
                    surface=obj["s"],
                    text_embedding=emb,
                    canonical=bool(obj["canon"]),
                    sensitive=bool(obj["sens"]),
                    language=obj["lang"],
                )
            )
    tids = [t.term_id for t in terms]
    if len(set(tids)) != len(tids):
        raise DuplicateIdError("duplicate term ids")
    return terms


# ----------------------------------------------------------------------
# Synthetic generation
# ----------------------------------------------------------------------

def zipf_probabilities(n_classes: int, exponent: float) -> np.ndarray:
    """Rank-frequency law p(r) proportional to (r+1)^-exponent."""
    ranks = np.arange(1, n_classes + 1, dtype=np.float64)
    p = ranks ** (-exponent)
    return p / p.sum()


@dataclass
class SyntheticDictionary:
    """Terms with planted interests and per-interest text clusters.

    ``interest_map`` is a valid file-mode interest assignment; the primary
    interest drives item interests during corpus generation.  ``prototypes``
    are per-interest text-space prototype vectors for centroid-mode
    assignment.
    """

    terms: list[TermRecord]
    interest_map: dict[int, frozenset[int]]
    primary_interest: dict[int, int]
    planted_cluster: dict[int, tuple[int, int]]  # tid -> (primary interest, cluster idx)
    prototypes: np.ndarray
    n_class_terms: int

    def class_term_ids(self) -> list[int]:
        return [t.term_id for t in self.terms[: self.n_class_terms]]


def generate_synthetic_dictionary(
    n_class_terms: int,
    n_noise_terms: int,
    taxonomy: InterestTaxonomy,
    clusters_per_interest: int = 3,
    text_dim: int = 32,
    n_interests_used: int | None = None,
    polysemy_every: int = 5,
    flagged_every: int = 0,
    seed: int = 0,
) -> SyntheticDictionary:
    """Build a term dictionary with planted per-interest text clusters.

    Class terms cycle through the used interests; every ``polysemy_every``-th
    class term also carries a secondary interest.  Noise terms get their own
    well-separated text clusters so removing them removes their labels.  When
    ``flagged_every`` > 0, every so many noise terms is flagged non-canonical,
    sensitive, or foreign-language (cycling through the three).
    """
    n_used = n_interests_used or len(taxonomy)
    n_used = min(n_used, len(taxonomy))
    rng = rng_for(seed, 100)
    # planted cluster centers, well separated relative to within-cluster noise
    centers = rng.normal(0.0, 4.0, size=(n_used, clusters_per_interest, text_dim))
    noise_centers = rng.normal(0.0, 4.0, size=(max(n_noise_terms, 1), text_dim))

    terms: list[TermRecord] = []
    interest_map: dict[int, frozenset[int]] = {}
    primary: dict[int, int] = {}
    planted: dict[int, tuple[int, int]] = {}

    for c in range(n_class_terms):
        interest = c % n_used
        cluster = (c // n_used) % clusters_per_interest
        emb = centers[interest, cluster] + rng.normal(0.0, 0.25, size=text_dim)
        interests = {interest}
        if polysemy_every and c % polysemy_every == polysemy_every - 1 and n_used > 1:
            interests.add((interest + 1) % n_used)
        tid = c
        terms.append(TermRecord(tid, f"class-term-{c:04d}", emb))
        interest_map[tid] = frozenset(interests)
        primary[tid] = interest
        planted[tid] = (interest, cluster)

    for j in range(n_noise_terms):
        tid = n_class_terms + j
        interest = int(rng.integers(0, n_used))
        emb = noise_centers[j] + rng.normal(0.0, 0.25, size=text_dim)
        canonical, sensitive, language = True, False, "en"
        if flagged_every and j % flagged_every == flagged_every - 1:
            kind = (j // flagged_every) % 3
            if kind == 0:
                canonical = False
            elif kind == 1:
                sensitive = True
            else:
                language = "xx"
        terms.append(
            TermRecord(tid, f"noise-term-{j:04d}", emb, canonical, sensitive, language)
        )
        interest_map[tid] = frozenset({interest})
        primary[tid] = interest
        planted[tid] = (interest, clusters_per_interest + j % max(1, clusters_per_interest))

    prototypes = centers.mean(axis=1)
    if n_used < len(taxonomy):
        pad = rng.normal(0.0, 4.0, size=(len(taxonomy) - n_used, text_dim))
        prototypes = np.concatenate([prototypes, pad], axis=0)
    return SyntheticDictionary(
        terms=terms,
        interest_map=interest_map,
        primary_interest=primary,
        planted_cluster=planted,
        prototypes=prototypes,
        n_class_terms=n_class_terms,
    )


def generate_synthetic_corpus(
    spec: SyntheticSpec,
    dictionary: SyntheticDictionary | Sequence[TermRecord],
    taxonomy: InterestTaxonomy,
    workers: int = 1,
) -> Corpus:
    """Generate a corpus with Zipf-distributed planted classes.

    Item class c is drawn from a Zipf(``zipf_exponent``) law; its embedding
    is the class centroid plus Gaussian noise, its annotations contain class
    term c at high confidence plus uniform noise terms at the configured
    rate.  Pure function of (spec, dictionary, taxonomy): work is split into
    fixed-size chunks with per-chunk seeds, so worker count never changes
    the output.
    """
    spec.validate()
    if isinstance(dictionary, SyntheticDictionary):
        terms = dictionary.terms
        primary = dictionary.primary_interest
    else:
        terms = list(dictionary)
        primary = {t.term_id: t.term_id % len(taxonomy) for t in terms}
    if len(terms) < spec.n_classes:
        raise ValidationError(
            f"dictionary has {len(terms)} terms < n_classes {spec.n_classes}"
        )

    n, d = spec.n_items, spec.embedding_dim
    probs = zipf_probabilities(spec.n_classes, spec.zipf_exponent)
    centroids = rng_for(spec.seed, 0).normal(0.0, 1.0, size=(spec.n_classes, d))
    templates = None
    if spec.image_size > 0:
        hw = spec.image_size
        templates = rng_for(spec.seed, 2).uniform(0.0, 1.0, size=(spec.n_classes, hw, hw, 3))

    ids = [f"item-{i:08d}" for i in range(n)]
    classes = np.empty(n, dtype=np.int64)
    embeddings = np.empty((n, d), dtype=np.float32)
    pixels = (
        np.empty((n, spec.image_size, spec.image_size, 3), dtype=np.float32)
        if templates is not None
        else None
    )
    annotations: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    interests: list[frozenset[int]] = [frozenset()] * n

    n_terms = len(terms)

    def fill_chunk(chunk: int) -> None:
        lo = chunk * GEN_CHUNK
        hi = min(n, lo + GEN_CHUNK)
        m = hi - lo
        rng = rng_for(spec.seed, 1, chunk)
        cls = rng.choice(spec.n_classes, size=m, p=probs)
        conf = rng.uniform(0.85, 1.0, size=m)
        noisy = rng.uniform(0.0, 1.0, size=m) < spec.annotation_noise_rate
        noise_tid = rng.integers(0, n_terms, size=m)
        noise_conf = rng.uniform(0.5, 1.0, size=m)
        emb = centroids[cls] + spec.noise_scale * rng.standard_normal((m, d))
        classes[lo:hi] = cls
        embeddings[lo:hi] = emb.astype(np.float32)
        if templates is not None:
            pix = templates[cls] + spec.pixel_noise * rng.standard_normal(
                (m, spec.image_size, spec.image_size, 3)
            )
            pixels[lo:hi] = np.clip(pix, 0.0, 1.0).astype(np.float32)
        for j in range(m):
            c = int(cls[j])
            anns = [(c, float(conf[j]))]
            if noisy[j] and int(noise_tid[j]) != c:
                anns.append((int(noise_tid[j]), float(noise_conf[j])))
            annotations[lo + j] = anns
            interests[lo + j] = frozenset({primary[c]})

    chunks = range((n + GEN_CHUNK - 1) // GEN_CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill_chunk, chunks))
    else:
        for chunk in chunks:
            fill_chunk(chunk)

    return Corpus(ids, annotations, interests, embeddings, pixels, classes)


# ----------------------------------------------------------------------
# Stats and splitting
# ----------------------------------------------------------------------

@dataclass
class CorpusStats:
    n_items: int
    distinct_labels: int
    total_assignments: int
    mean_labels_per_item: float
    label_freq: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "distinct_labels": self.distinct_labels,
            "total_assignments": self.total_assignments,
            "mean_labels_per_item": self.mean_labels_per_item,
            "label_freq": {str(k): v for k, v in sorted(self.label_freq.items())},
        }


def corpus_stats(corpus: Corpus, labels=None) -> CorpusStats:
    """Item/label counts and the per-class frequency table.

    With ``labels`` (LabeledExample iterable) the stats cover final label
    sets; without, they cover raw annotation terms.
    """
    freq: dict[int, int] = {}
    total = 0
    n_items = len(corpus)
    if labels is not None:
        labels = list(labels)
        n_items = len(labels)
        for ex in labels:
            for lab in ex.label_ids:
                freq[lab] = freq.get(lab, 0) + 1
                total += 1
    else:
        for anns in corpus.annotations:
            for tid, _ in anns:
                freq[tid] = freq.get(tid, 0) + 1
                total += 1
    mean = total / n_items if n_items else 0.0
    return CorpusStats(
        n_items=n_items,
        distinct_labels=len(freq),
        total_assignments=total,
        mean_labels_per_item=mean,
        label_freq=freq,
    )


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        root = x
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[x] != root:  # path compression
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def split_with_dedup(
    corpus: Corpus,
    dup_pairs: Iterable[tuple[str, str]],
    eval_fraction: float,
    seed: int,
) -> tuple[Corpus, Corpus]:
    """Random split that keeps duplicate closures on one side.

    Connected components of ``dup_pairs`` are assigned atomically, so no
    transitive near-duplicate pair ever crosses the train/eval boundary.
    Eval lands within one component of the target fraction.
    """
    if not 0.0 < eval_fraction < 1.0:
        raise ValidationError("eval_fraction must be in (0,1)")
    index = corpus.id_index()
    uf = _UnionFind()
    for a, b in dup_pairs:
        if a not in index or b not in index:
            raise ValidationError(f"dup pair references unknown id: ({a}, {b})")
        uf.union(a, b)

    groups: dict[str, list[int]] = {}
    for cid, i in index.items():
        groups.setdefault(uf.find(cid), []).append(i)
    components = [sorted(groups[key]) for key in sorted(groups)]

    rng = rng_for(seed, 3)
    order = rng.permutation(len(components))
    target = eval_fraction * len(corpus)
    eval_idx: list[int] = []
    train_idx: list[int] = []
    for ci in order:
        comp = components[ci]
        if len(eval_idx) < target:
            eval_idx.extend(comp)
        else:
            train_idx.extend(comp)
    return corpus.subset(sorted(train_idx)), corpus.subset(sorted(eval_idx))
