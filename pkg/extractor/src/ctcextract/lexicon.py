"""Grapheme-to-phoneme conversion with a built-in English IPA lexicon.

Known words come from the word list below; anything else falls back to
letter-to-sound rules that are crude but deterministic and stay inside
PHONEME_SET. Both paths emit symbols from the same inventory the
recognition backends use, so phonemized output always resolves against an
extraction run's vocab sidecar.
"""

from __future__ import annotations

import re


class LexiconError(ValueError):
    pass


# the shared phoneme inventory: consonants then monophthongs then diphthongs
PHONEME_SET = (
    "p", "b", "t", "d", "k", "ɡ", "f", "v", "θ", "ð", "s", "z",
    "ʃ", "ʒ", "h", "m", "n", "ŋ", "l", "r", "w", "j", "tʃ", "dʒ",
    "iː", "ɪ", "e", "æ", "ɑː", "ɒ", "ɔː", "ʊ", "uː", "ʌ", "ə", "ɜː",
    "eɪ", "aɪ", "ɔɪ", "əʊ", "aʊ",
)

_LEXICON = {
    "a": ("ə",),
    "an": ("ə", "n"),
    "and": ("æ", "n", "d"),
    "at": ("æ", "t"),
    "bad": ("b", "æ", "d"),
    "bat": ("b", "æ", "t"),
    "bed": ("b", "e", "d"),
    "big": ("b", "ɪ", "ɡ"),
    "bird": ("b", "ɜː", "d"),
    "black": ("b", "l", "æ", "k"),
    "blue": ("b", "l", "uː"),
    "boat": ("b", "əʊ", "t"),
    "book": ("b", "ʊ", "k"),
    "boy": ("b", "ɔɪ",),
    "cat": ("k", "æ", "t"),
    "chair": ("tʃ", "e", "r"),
    "cheese": ("tʃ", "iː", "z"),
    "child": ("tʃ", "aɪ", "l", "d"),
    "cow": ("k", "aʊ",),
    "day": ("d", "eɪ",),
    "dog": ("d", "ɒ", "ɡ"),
    "door": ("d", "ɔː", "r"),
    "down": ("d", "aʊ", "n"),
    "eat": ("iː", "t"),
    "fish": ("f", "ɪ", "ʃ"),
    "five": ("f", "aɪ", "v"),
    "food": ("f", "uː", "d"),
    "four": ("f", "ɔː", "r"),
    "girl": ("ɡ", "ɜː", "l"),
    "go": ("ɡ", "əʊ",),
    "good": ("ɡ", "ʊ", "d"),
    "green": ("ɡ", "r", "iː", "n"),
    "hat": ("h", "æ", "t"),
    "he": ("h", "iː",),
    "house": ("h", "aʊ", "s"),
    "in": ("ɪ", "n"),
    "is": ("ɪ", "z"),
    "it": ("ɪ", "t"),
    "jump": ("dʒ", "ʌ", "m", "p"),
    "like": ("l", "aɪ", "k"),
    "man": ("m", "æ", "n"),
    "mat": ("m", "æ", "t"),
    "measure": ("m", "e", "ʒ", "ə"),
    "moon": ("m", "uː", "n"),
    "mouse": ("m", "aʊ", "s"),
    "my": ("m", "aɪ",),
    "name": ("n", "eɪ", "m"),
    "new": ("n", "j", "uː"),
    "night": ("n", "aɪ", "t"),
    "no": ("n", "əʊ",),
    "nurse": ("n", "ɜː", "s"),
    "of": ("ə", "v"),
    "on": ("ɒ", "n"),
    "one": ("w", "ʌ", "n"),
    "out": ("aʊ", "t"),
    "red": ("r", "e", "d"),
    "ring": ("r", "ɪ", "ŋ"),
    "sat": ("s", "æ", "t"),
    "say": ("s", "eɪ",),
    "school": ("s", "k", "uː", "l"),
    "see": ("s", "iː",),
    "she": ("ʃ", "iː",),
    "sheep": ("ʃ", "iː", "p"),
    "ship": ("ʃ", "ɪ", "p"),
    "sing": ("s", "ɪ", "ŋ"),
    "sit": ("s", "ɪ", "t"),
    "star": ("s", "t", "ɑː", "r"),
    "sun": ("s", "ʌ", "n"),
    "that": ("ð", "æ", "t"),
    "the": ("ð", "ə",),
    "they": ("ð", "eɪ",),
    "thin": ("θ", "ɪ", "n"),
    "thing": ("θ", "ɪ", "ŋ"),
    "think": ("θ", "ɪ", "ŋ", "k"),
    "this": ("ð", "ɪ", "s"),
    "three": ("θ", "r", "iː",),
    "toy": ("t", "ɔɪ",),
    "tree": ("t", "r", "iː",),
    "two": ("t", "uː",),
    "up": ("ʌ", "p"),
    "voice": ("v", "ɔɪ", "s"),
    "water": ("w", "ɔː", "t", "ə"),
    "we": ("w", "iː",),
    "white": ("w", "aɪ", "t"),
    "yes": ("j", "e", "s"),
    "yellow": ("j", "e", "l", "əʊ",),
    "zoo": ("z", "uː",),
}

# letter-to-sound fallback: longest-match digraphs first, then single letters
_DIGRAPHS = [
    ("tch", ("tʃ",)),
    ("igh", ("aɪ",)),
    ("sh", ("ʃ",)),
    ("ch", ("tʃ",)),
    ("th", ("θ",)),
    ("ph", ("f",)),
    ("wh", ("w",)),
    ("ng", ("ŋ",)),
    ("ck", ("k",)),
    ("qu", ("k", "w")),
    ("ee", ("iː",)),
    ("ea", ("iː",)),
    ("oo", ("uː",)),
    ("ou", ("aʊ",)),
    ("ow", ("aʊ",)),
    ("oa", ("əʊ",)),
    ("ai", ("eɪ",)),
    ("ay", ("eɪ",)),
    ("oi", ("ɔɪ",)),
    ("oy", ("ɔɪ",)),
    ("ar", ("ɑː",)),
    ("er", ("ɜː",)),
    ("ir", ("ɜː",)),
    ("or", ("ɔː",)),
    ("ur", ("ɜː",)),
]

_SINGLE = {
    "a": ("æ",), "b": ("b",), "c": ("k",), "d": ("d",), "e": ("e",),
    "f": ("f",), "g": ("ɡ",), "h": ("h",), "i": ("ɪ",), "j": ("dʒ",),
    "k": ("k",), "l": ("l",), "m": ("m",), "n": ("n",), "o": ("ɒ",),
    "p": ("p",), "q": ("k",), "r": ("r",), "s": ("s",), "t": ("t",),
    "u": ("ʌ",), "v": ("v",), "w": ("w",), "x": ("k", "s"), "y": ("j",),
    "z": ("z",),
}

_WORD_RE = re.compile(r"[a-z']+")


def supported_language(tag: str) -> bool:
    tag = tag.lower()
    return tag == "en" or tag.startswith("en-")


def _letter_rules(word: str):
    out = []
    i = 0
    while i < len(word):
        for pattern, phones in _DIGRAPHS:
            if word.startswith(pattern, i):
                out.extend(phones)
                i += len(pattern)
                break
        else:
            ch = word[i]
            if ch in _SINGLE:
                out.extend(_SINGLE[ch])
            i += 1
    return tuple(out)


def phonemize_word(word: str) -> tuple[str, ...]:
    word = word.lower().strip("'")
    if not word:
        return ()
    hit = _LEXICON.get(word)
    if hit is not None:
        return hit
    return _letter_rules(word)


def phonemize(text: str, language: str = "en") -> tuple[str, ...]:
    """Transcript -> phoneme symbol sequence.

    Raises on an unsupported language tag or a transcript with no words.
    """
    if not supported_language(language):
        raise LexiconError(f"unsupported language tag {language!r}")
    words = _WORD_RE.findall(text.lower())
    if not words:
        raise LexiconError("transcript contains no words")
    phones: list[str] = []
    for word in words:
        phones.extend(phonemize_word(word))
    if not phones:
        raise LexiconError("transcript phonemized to an empty sequence")
    return tuple(phones)
