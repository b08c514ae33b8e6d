"""Body model: joint names, kinematic tree, limb groups and hinge limits."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InvalidInputError

# LSP-style 14 joint convention.
DEFAULT_JOINT_NAMES = (
    "head",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
)

# Parent of each joint; the neck is the root (parent = self).
DEFAULT_PARENTS = (1, 1, 1, 2, 3, 1, 5, 6, 1, 8, 9, 1, 11, 12)

DEFAULT_LIMB_GROUPS = {
    "right_arm": (3, 4),
    "left_arm": (6, 7),
    "right_leg": (9, 10),
    "left_leg": (12, 13),
}

# Interior-angle interval (radians) at each hinge joint.  These are
# configurable defaults, not values taken from any published prior.
DEFAULT_HINGE_LIMITS = {
    "right_elbow": (0.10, 3.10),
    "left_elbow": (0.10, 3.10),
    "right_knee": (0.10, 3.10),
    "left_knee": (0.10, 3.10),
}

# Expected sign of dot(bend-plane normal, left_hip - right_hip).  Knees bend
# backward, elbows bend forward; a mirrored pose flips these signs, which is
# what makes the anthropomorphism score chirality-sensitive.
DEFAULT_HINGE_SIGNS = {
    "right_elbow": -1,
    "left_elbow": -1,
    "right_knee": 1,
    "left_knee": 1,
}


@dataclass(frozen=True)
class Skeleton:
    names: tuple[str, ...] = DEFAULT_JOINT_NAMES
    parents: tuple[int, ...] = DEFAULT_PARENTS
    limb_groups: dict[str, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_LIMB_GROUPS)
    )
    hinge_limits: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_HINGE_LIMITS)
    )
    hinge_signs: dict[str, int] = field(
        default_factory=lambda: dict(DEFAULT_HINGE_SIGNS)
    )

    def __post_init__(self):
        n = len(self.names)
        if len(set(self.names)) != n:
            raise InvalidInputError("joint names must be unique")
        if len(self.parents) != n:
            raise InvalidInputError("parents length must match names")
        roots = [i for i, p in enumerate(self.parents) if p == i]
        if len(roots) != 1:
            raise InvalidInputError("parent graph must have exactly one root")
        # Every joint must reach the root without cycles.
        for i in range(n):
            seen, j = set(), i
            while self.parents[j] != j:
                if j in seen or not 0 <= self.parents[j] < n:
                    raise InvalidInputError("parent graph is not a tree")
                seen.add(j)
                j = self.parents[j]
        for name, grp in self.limb_groups.items():
            if len(grp) != 2 or not all(0 <= g < n for g in grp):
                raise InvalidInputError(f"limb group {name!r} must hold 2 joint indices")
        for name in self.hinge_limits:
            if name not in self.names:
                raise InvalidInputError(f"hinge limit for unknown joint {name!r}")

    @property
    def n_joints(self) -> int:
        return len(self.names)

    @property
    def root(self) -> int:
        return next(i for i, p in enumerate(self.parents) if p == i)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def children(self, joint: int) -> list[int]:
        return [i for i, p in enumerate(self.parents) if p == joint and i != joint]

    def to_json(self) -> str:
        return json.dumps(
            {
                "names": list(self.names),
                "parents": list(self.parents),
                "limb_groups": {k: list(v) for k, v in self.limb_groups.items()},
                "hinge_limits": {k: list(v) for k, v in self.hinge_limits.items()},
                "hinge_signs": dict(self.hinge_signs),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "Skeleton":
        raw = json.loads(text)
        try:
            return cls(
                names=tuple(raw["names"]),
                parents=tuple(raw["parents"]),
                limb_groups={k: tuple(v) for k, v in raw["limb_groups"].items()},
                hinge_limits={k: tuple(v) for k, v in raw.get("hinge_limits", {}).items()},
                hinge_signs={
                    k: int(v)
                    for k, v in raw.get(
                        "hinge_signs",
                        {k: DEFAULT_HINGE_SIGNS.get(k, 1) for k in raw.get("hinge_limits", {})},
                    ).items()
                },
            )
        except KeyError as exc:
            raise InvalidInputError(f"skeleton file missing field {exc}") from exc


def default_skeleton() -> Skeleton:
    return Skeleton()
