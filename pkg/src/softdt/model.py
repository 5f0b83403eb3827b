"""Trained-model container and its text file format.

A model file is a small header of ``key: value`` lines followed by a
``tree:`` line and the serialized tree. Means are stored so that soft
evaluation uses the training scale at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree_induction import dump_tree, load_tree

FORMAT = "softdt-model 1"


@dataclass
class Model:
    """A tree plus what is needed to apply it to new CSV files.

    Attributes:
        tree: Root node.
        attribute_names: Column names in training order.
        class_names: Label strings indexed by class id.
        means: Training attribute means (NaN-free, missing columns as 0).
        config: Training settings echoed as strings.
    """

    tree: object
    attribute_names: tuple
    class_names: tuple
    means: np.ndarray
    config: dict = field(default_factory=dict)

    def dumps(self):
        lines = [FORMAT,
                 "attributes: " + ",".join(self.attribute_names),
                 "classes: " + ",".join(self.class_names),
                 "means: " + ",".join(repr(float(m)) for m in self.means)]
        for k, v in self.config.items():
            lines.append(f"config.{k}: {v}")
        lines.append("tree:")
        return "\n".join(lines) + "\n" + dump_tree(self.tree)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        head, sep, body = text.partition("\ntree:\n")
        lines = head.splitlines()
        if not sep or not lines or lines[0].strip() != FORMAT:
            raise ValueError("not a model file")
        fields, config = {}, {}
        for ln in lines[1:]:
            key, colon, value = ln.partition(": ")
            if not colon:
                raise ValueError(f"bad header line {ln!r}")
            if key.startswith("config."):
                config[key[7:]] = value
            else:
                fields[key] = value
        try:
            names = tuple(fields["attributes"].split(","))
            classes = tuple(fields["classes"].split(","))
            means = np.array([float(v) for v in fields["means"].split(",")])
        except KeyError as exc:
            raise ValueError(f"model header lacks {exc.args[0]!r}") from None
        if means.size != len(names):
            raise ValueError("means and attributes disagree in length")
        return cls(load_tree(body), names, classes, means, config)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())
