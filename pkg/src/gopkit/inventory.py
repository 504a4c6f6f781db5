"""Phoneme symbol tables, canonical sequences, and confusion maps.

All index math in the rest of the library runs against a ``PhonemeInventory``:
an ordered symbol table with one reserved blank token. Confusion maps restrict
which substitutions a scorer is allowed to try at each position.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field


class InventoryError(ValueError):
    """A symbol table or canonical sequence violates its contract."""


class ConfusionMapError(ValueError):
    """A confusion-map document is malformed or inconsistent with the inventory."""


CONFUSION_MAP_VERSION = 1

# Seed substitution sets for English: stop/fricative place-of-articulation
# neighbours, frequent L2 substitutions, flapping, and diphthong
# simplification. Symbols missing from an inventory are skipped.
DEFAULT_ENGLISH_CONFUSIONS = (
    ("p", ("b", "m")),
    ("θ", ("ð", "f", "s")),
    ("ð", ("d", "θ", "z")),
    ("æ", ("e", "ɛ")),
    ("ʌ", ("ɑ",)),
    ("t", ("d", "ɾ")),
    ("d", ("t", "ɾ")),
    ("eɪ", ("eː", "e")),
    ("əʊ", ("o", "oː")),
)

# Rewrite rules used to plant artificial substitution errors in otherwise
# correct transcriptions: dental fricatives, open vowels, and diphthong
# simplification.
DEFAULT_ERROR_RULES = (
    ("ð", ("d",)),
    ("θ", ("s",)),
    ("æ", ("e",)),
    ("ʌ", ("ɑ",)),
    ("eɪ", ("eː",)),
    ("əʊ", ("o",)),
)


@dataclass(frozen=True)
class PhonemeInventory:
    """Ordered phoneme symbol table with a reserved CTC blank token.

    ``symbols`` includes the blank symbol at ``blank_index``; posterior matrix
    columns mirror this ordering exactly. ``size`` counts non-blank phonemes.
    """

    symbols: tuple[str, ...]
    blank_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(set(self.symbols)) != len(self.symbols):
            raise InventoryError("inventory symbols must be unique")
        if any(not isinstance(s, str) or not s for s in self.symbols):
            raise InventoryError("inventory symbols must be non-empty strings")
        if not 0 <= self.blank_index < len(self.symbols):
            raise InventoryError(f"blank_index {self.blank_index} out of range")
        if self.size < 1:
            raise InventoryError("inventory needs at least one non-blank phoneme")
        object.__setattr__(
            self, "_index", {s: i for i, s in enumerate(self.symbols)}
        )

    @property
    def size(self) -> int:
        """Number of non-blank phonemes (V)."""
        return len(self.symbols) - 1

    @property
    def width(self) -> int:
        """Number of posterior columns (V + 1, blank included)."""
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise InventoryError(f"unknown phoneme symbol: {symbol!r}") from None

    def symbol(self, phoneme_id: int) -> str:
        return self.symbols[phoneme_id]

    def is_blank(self, phoneme_id: int) -> bool:
        return phoneme_id == self.blank_index

    def non_blank_ids(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.symbols)) if i != self.blank_index)

    @classmethod
    def from_phonemes(cls, phonemes, blank_symbol="<blank>") -> "PhonemeInventory":
        """Build an inventory with the blank token prepended at index 0."""
        return cls(symbols=(blank_symbol, *phonemes), blank_index=0)

    def to_document(self) -> dict:
        return {"symbols": list(self.symbols), "blank_index": self.blank_index}

    @classmethod
    def from_document(cls, doc: dict) -> "PhonemeInventory":
        if not isinstance(doc, dict) or "symbols" not in doc:
            raise InventoryError("vocab document must contain a 'symbols' list")
        return cls(
            symbols=tuple(doc["symbols"]),
            blank_index=int(doc.get("blank_index", 0)),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "PhonemeInventory":
        with open(path, encoding="utf-8") as fh:
            return cls.from_document(json.load(fh))


@dataclass(frozen=True)
class CanonicalSequence:
    """Reference phoneme-id sequence for one utterance (no blanks, n >= 1)."""

    phoneme_ids: tuple[int, ...]
    utterance_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "phoneme_ids", tuple(int(i) for i in self.phoneme_ids))
        if len(self.phoneme_ids) < 1:
            raise InventoryError("canonical sequence must contain at least one phoneme")
        if any(i < 0 for i in self.phoneme_ids):
            raise InventoryError("phoneme ids must be non-negative")

    def __len__(self) -> int:
        return len(self.phoneme_ids)

    def validate(self, inventory: PhonemeInventory) -> "CanonicalSequence":
        for i in self.phoneme_ids:
            if i >= inventory.width:
                raise InventoryError(
                    f"phoneme id {i} out of range for inventory of width {inventory.width}"
                )
            if inventory.is_blank(i):
                raise InventoryError("canonical sequence may not contain the blank token")
        return self

    def symbols(self, inventory: PhonemeInventory) -> tuple[str, ...]:
        return tuple(inventory.symbol(i) for i in self.phoneme_ids)

    @classmethod
    def from_symbols(cls, symbols, inventory: PhonemeInventory,
                     utterance_id: str = "") -> "CanonicalSequence":
        ids = tuple(inventory.index(s) for s in symbols)
        return cls(ids, utterance_id).validate(inventory)


@dataclass(frozen=True)
class ConfusionMap:
    """Per-phoneme allowed-substitution sets plus a deletion switch.

    Substitute sets are ordered (document order) so downstream diagnosis
    output is deterministic. Entries never map a phoneme to itself or to the
    blank token.
    """

    entries: dict = field(default_factory=dict)
    allow_deletion: bool = True

    def __post_init__(self):
        clean = {}
        for key, subs in self.entries.items():
            # collapse duplicates, keep first occurrence
            clean[int(key)] = tuple(dict.fromkeys(int(s) for s in subs))
        object.__setattr__(self, "entries", clean)
        for key, subs in self.entries.items():
            if key in subs:
                raise ConfusionMapError(
                    f"phoneme id {key} maps to itself in the confusion map"
                )

    def validate(self, inventory: PhonemeInventory) -> "ConfusionMap":
        for key, subs in self.entries.items():
            for pid in (key, *subs):
                if not 0 <= pid < inventory.width:
                    raise ConfusionMapError(f"phoneme id {pid} not in inventory")
            if inventory.is_blank(key) or any(inventory.is_blank(s) for s in subs):
                raise ConfusionMapError("the blank token cannot appear in a confusion map")
        return self

    def substitutes_for(self, phoneme_id: int) -> tuple[int, ...]:
        return self.entries.get(phoneme_id, ())

    def to_document(self, inventory: PhonemeInventory) -> dict:
        return {
            "version": CONFUSION_MAP_VERSION,
            "entries": {
                inventory.symbol(k): [inventory.symbol(s) for s in subs]
                for k, subs in self.entries.items()
            },
            "allow_deletion": self.allow_deletion,
        }

    def save(self, path, inventory: PhonemeInventory) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_document(inventory), fh, ensure_ascii=False, indent=2)
            fh.write("\n")


def confusion_map_from_document(doc, inventory: PhonemeInventory) -> ConfusionMap:
    """Validate a confusion-map document against an inventory.

    Accepts either the versioned form ``{"version": 1, "entries": {...},
    "allow_deletion": bool}`` or a bare ``{symbol: [symbols...]}`` mapping.
    Unknown symbols are hard errors; duplicate substitutes collapse to their
    first occurrence.
    """
    if not isinstance(doc, dict):
        raise ConfusionMapError("confusion-map document must be a JSON object")
    versioned = "entries" in doc and set(doc) <= {"version", "entries", "allow_deletion"}
    if versioned:
        version = doc.get("version", CONFUSION_MAP_VERSION)
        if version != CONFUSION_MAP_VERSION:
            raise ConfusionMapError(f"unsupported confusion-map version: {version!r}")
        raw_entries = doc["entries"]
        allow_deletion = bool(doc.get("allow_deletion", True))
    else:
        raw_entries = doc
        allow_deletion = True
    if not isinstance(raw_entries, dict):
        raise ConfusionMapError("'entries' must map phoneme symbols to symbol lists")

    entries = {}
    for sym, subs in raw_entries.items():
        if not isinstance(subs, (list, tuple)):
            raise ConfusionMapError(f"substitutes for {sym!r} must be a list")
        try:
            key = inventory.index(sym)
            sub_ids = tuple(inventory.index(s) for s in subs)
        except InventoryError as exc:
            raise ConfusionMapError(str(exc)) from None
        if key in sub_ids:
            raise ConfusionMapError(f"phoneme {sym!r} maps to itself")
        entries[key] = sub_ids
    return ConfusionMap(entries=entries, allow_deletion=allow_deletion).validate(inventory)


def load_confusion_map(path, inventory: PhonemeInventory) -> ConfusionMap:
    """Load and validate a confusion-map JSON document from ``path``."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfusionMapError(f"malformed confusion-map document: {exc}") from None
    return confusion_map_from_document(doc, inventory)


def _seed_map(inventory, seeds, allow_deletion=True):
    entries = {}
    skipped = []
    for sym, subs in seeds:
        if sym not in inventory._index:
            skipped.append(sym)
            continue
        kept = []
        for s in subs:
            if s in inventory._index:
                kept.append(inventory.index(s))
            else:
                skipped.append(s)
        if kept:
            entries[inventory.index(sym)] = tuple(kept)
    if skipped:
        warnings.warn(
            "confusion-map symbols not in inventory, skipped: " + ", ".join(skipped),
            stacklevel=3,
        )
    return ConfusionMap(entries=entries, allow_deletion=allow_deletion).validate(inventory)


def default_english_map(inventory: PhonemeInventory) -> ConfusionMap:
    """Built-in English confusion map.

    Symbols absent from ``inventory`` are skipped with a warning rather than
    raising; the built-in map is a convenience, not a contract.
    """
    return _seed_map(inventory, DEFAULT_ENGLISH_CONFUSIONS)


def default_error_rules(inventory: PhonemeInventory) -> ConfusionMap:
    """Built-in artificial-error rewrite table (see ``inject_artificial_errors``)."""
    return _seed_map(inventory, DEFAULT_ERROR_RULES)


def substitution_pass_count(seq: CanonicalSequence, cmap: ConfusionMap | None = None,
                            vocab_size: int | None = None) -> int:
    """Number of perturbed-sequence evaluations a scorer will run.

    Unrestricted (``cmap is None``): ``n * (V - 1)`` substitutions plus ``n``
    deletions. Restricted: the summed substitute-set sizes, plus ``n``
    deletions when the map allows deletion.
    """
    ids = seq.phoneme_ids if isinstance(seq, CanonicalSequence) else tuple(seq)
    n = len(ids)
    if cmap is None:
        if vocab_size is None:
            raise ValueError("vocab_size is required for the unrestricted count")
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        return n * (vocab_size - 1) + n
    count = sum(len(cmap.substitutes_for(pid)) for pid in ids)
    if cmap.allow_deletion:
        count += n
    return count
