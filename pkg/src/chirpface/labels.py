"""Expression classes shared by the classifier and the engagement rules."""

from __future__ import annotations

import enum


class ExpressionLabel(enum.IntEnum):
    """Four expression classes.

    The integer values double as indices into engagement count arrays and
    line up with genre ids: comedy=0 ↔ Happy, tragedy=1 ↔ SadNeutral,
    anger=2 ↔ Angry, horror=3 ↔ Surprise.
    """

    HAPPY = 0
    SAD_NEUTRAL = 1
    ANGRY = 2
    SURPRISE = 3

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, value) -> "ExpressionLabel":
        """Accept an int, an enum member, or a name such as ``"Happy"``/``"sad_neutral"``."""
        if isinstance(value, cls):
            return value
        if isinstance(value, (int,)) and not isinstance(value, bool):
            return cls(value)
        key = str(value).strip().lower().replace("/", "").replace("_", "").replace(" ", "")
        try:
            return _BY_KEY[key]
        except KeyError:
            raise ValueError(f"unknown expression label {value!r}") from None


_DISPLAY = {
    ExpressionLabel.HAPPY: "Happy",
    ExpressionLabel.SAD_NEUTRAL: "SadNeutral",
    ExpressionLabel.ANGRY: "Angry",
    ExpressionLabel.SURPRISE: "Surprise",
}

_BY_KEY = {
    "happy": ExpressionLabel.HAPPY,
    "happiness": ExpressionLabel.HAPPY,
    "sadneutral": ExpressionLabel.SAD_NEUTRAL,
    "sad": ExpressionLabel.SAD_NEUTRAL,
    "sadness": ExpressionLabel.SAD_NEUTRAL,
    "neutral": ExpressionLabel.SAD_NEUTRAL,
    "angry": ExpressionLabel.ANGRY,
    "anger": ExpressionLabel.ANGRY,
    "surprise": ExpressionLabel.SURPRISE,
    "surprised": ExpressionLabel.SURPRISE,
}
for _label in ExpressionLabel:
    _BY_KEY[str(int(_label))] = _label

N_CLASSES = len(ExpressionLabel)
