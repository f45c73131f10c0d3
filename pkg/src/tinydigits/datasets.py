"""6x6 image datasets: digit glyphs, noisy variants, probes, and surgery.

Every generator here is a pure function of its arguments (seed included),
and datasets are immutable values: the surgery operations (class
replacement, rebalancing) always return new datasets and leave their input
untouched, so experiments can compare the pre- and post-surgery data side
by side.
"""

import json
from dataclasses import dataclass

from .errors import DocumentError
from .network import INPUT_COLS, INPUT_PIXELS, INPUT_ROWS, as_pixels
from .rng import Rng

DATASET_FORMAT_VERSION = 1

# Hand-designed binary pixel art for the digits 0-9. The set is validated
# below: all pairwise Hamming distances are >= 6 (so nearest-neighbor
# separation is comfortable at this resolution) and every glyph lights
# between 6 and 30 of the 36 cells. The zero is slashed to keep it far
# from the eight.
_GLYPH_ART = {
    0: ("011110", "110011", "110111", "111011", "110011", "011110"),
    1: ("001100", "011100", "001100", "001100", "001100", "011110"),
    2: ("011110", "110011", "000110", "001100", "011000", "111111"),
    3: ("111110", "000011", "001110", "000011", "110011", "011110"),
    4: ("000110", "001110", "011010", "110010", "111111", "000010"),
    5: ("111111", "110000", "111110", "000011", "110011", "011110"),
    6: ("001110", "011000", "110000", "111110", "110011", "011110"),
    7: ("111111", "000011", "000110", "001100", "011000", "011000"),
    8: ("011110", "010010", "011110", "010010", "010010", "011110"),
    9: ("011110", "110011", "110011", "011111", "000110", "011100"),
}

CANONICAL_GLYPHS: dict[int, tuple[float, ...]] = {
    digit: tuple(float(c) for row in art for c in row)
    for digit, art in _GLYPH_ART.items()
}


def glyph_grid(digit: int) -> tuple[float, ...]:
    """The canonical 6x6 glyph for a digit, as a pixel tuple."""
    if digit not in CANONICAL_GLYPHS:
        raise ValueError(f"no glyph for digit {digit!r}")
    return CANONICAL_GLYPHS[digit]


def validate_glyphs(glyphs: dict[int, tuple[float, ...]]) -> None:
    """Enforce the glyph-set invariants: 10 distinct, binary, mid-density grids."""
    if sorted(glyphs) != list(range(10)):
        raise ValueError("glyph set must map exactly the digits 0-9")
    seen = set()
    for digit, pixels in glyphs.items():
        pixels = as_pixels(pixels)
        if any(v not in (0.0, 1.0) for v in pixels):
            raise ValueError(f"glyph {digit} must be binary")
        lit = sum(int(v) for v in pixels)
        if not 6 <= lit <= 30:
            raise ValueError(f"glyph {digit} has {lit} lit pixels (expected 6..30)")
        if pixels in seen:
            raise ValueError(f"glyph {digit} duplicates another glyph")
        seen.add(pixels)


@dataclass(frozen=True)
class LabeledImage:
    image: tuple[float, ...]
    class_index: int
    class_name: str


@dataclass(frozen=True)
class Dataset:
    name: str
    classes: tuple[str, ...]
    examples: tuple[LabeledImage, ...]

    def class_counts(self) -> tuple[int, ...]:
        counts = [0] * len(self.classes)
        for ex in self.examples:
            counts[ex.class_index] += 1
        return tuple(counts)


def _validate_dataset(ds: Dataset) -> None:
    if not ds.classes:
        raise ValueError("class list must be nonempty")
    if len(set(ds.classes)) != len(ds.classes):
        raise ValueError("class names must be duplicate-free")
    for ex in ds.examples:
        if not 0 <= ex.class_index < len(ds.classes):
            raise ValueError(f"class_index {ex.class_index} out of range")
        if ex.class_name != ds.classes[ex.class_index]:
            raise ValueError("class_name does not match the class table")


@dataclass(frozen=True)
class VariantSpec:
    """Noise model for glyph variants: optional 1-pixel shift, then flips.

    The defaults (no shift, 10% flips) are calibrated so that 20 examples
    per class are enough to generalize well while leaving the task hard
    enough for class-imbalance effects to show.
    """

    per_class: int
    flip_prob: float = 0.10
    shift_max: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if not 0.0 <= self.flip_prob <= 0.15:
            raise ValueError("flip_prob must be in [0, 0.15]")
        if self.shift_max not in (0, 1):
            raise ValueError("shift_max must be 0 or 1")


def _shift(pixels: tuple[float, ...], dr: int, dc: int) -> list[float]:
    """Translate by (dr, dc) with zero fill at the borders."""
    out = [0.0] * INPUT_PIXELS
    for r in range(INPUT_ROWS):
        sr = r - dr
        if not 0 <= sr < INPUT_ROWS:
            continue
        for c in range(INPUT_COLS):
            sc = c - dc
            if 0 <= sc < INPUT_COLS:
                out[r * INPUT_COLS + c] = pixels[sr * INPUT_COLS + sc]
    return out


def make_digit_dataset(glyphs: dict[int, tuple[float, ...]], spec: VariantSpec) -> Dataset:
    """Ten classes "0".."9" with per_class examples each.

    Example 0 of every class is the unmodified glyph; the remaining
    variants draw, from a single stream seeded by spec.seed and consumed in
    class-major order, a row shift, a column shift, and then one flip
    decision per pixel (row-major). The shift and flip draws happen even
    when shift_max or flip_prob make them no-ops, so the stream layout does
    not depend on the parameter values.
    """
    validate_glyphs(glyphs)
    classes = tuple(str(d) for d in range(10))
    rng = Rng(spec.seed)
    examples = []
    for digit in range(10):
        base = as_pixels(glyphs[digit])
        examples.append(LabeledImage(base, digit, classes[digit]))
        for _ in range(spec.per_class - 1):
            span = 2 * spec.shift_max + 1
            dr = rng.below(span) - spec.shift_max
            dc = rng.below(span) - spec.shift_max
            pixels = _shift(base, dr, dc)
            for i in range(INPUT_PIXELS):
                if rng.random() < spec.flip_prob:
                    pixels[i] = 1.0 - pixels[i]
            examples.append(LabeledImage(tuple(pixels), digit, classes[digit]))
    return Dataset("digits", classes, tuple(examples))


def make_checkerboard(phase: int = 0) -> tuple[float, ...]:
    """Alternating 0/1 grid; pixel(r, c) = 1 when (r + c + phase) is even."""
    if phase not in (0, 1):
        raise ValueError("phase must be 0 or 1")
    return tuple(
        1.0 if (r + c + phase) % 2 == 0 else 0.0
        for r in range(INPUT_ROWS)
        for c in range(INPUT_COLS)
    )


def make_random_images(n: int, density: float, seed: int) -> list[tuple[float, ...]]:
    """n binary images; each pixel is independently 1 with the given density."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must be in [0, 1]")
    rng = Rng(seed)
    images = []
    for _ in range(n):
        images.append(
            tuple(1.0 if rng.random() < density else 0.0 for _ in range(INPUT_PIXELS))
        )
    return images


def replace_class_with_random(
    ds: Dataset,
    class_index: int,
    new_name: str = "not-a-digit",
    density: float = 0.5,
    seed: int = 0,
) -> Dataset:
    """Swap one class's images for fresh random images and rename the class.

    Example positions, the total count, and every other class are preserved
    bit for bit; the input dataset is not modified.
    """
    if not 0 <= class_index < len(ds.classes):
        raise ValueError(f"class_index {class_index} out of range")
    if new_name in ds.classes and new_name != ds.classes[class_index]:
        raise ValueError(f"class name {new_name!r} already in use")
    slots = [i for i, ex in enumerate(ds.examples) if ex.class_index == class_index]
    images = make_random_images(len(slots), density, seed) if slots else []
    classes = tuple(
        new_name if i == class_index else name for i, name in enumerate(ds.classes)
    )
    examples = list(ds.examples)
    for slot, image in zip(slots, images):
        examples[slot] = LabeledImage(image, class_index, new_name)
    return Dataset(ds.name, classes, tuple(examples))


def rebalance_classes(
    ds: Dataset, proportions: dict[int, float], seed: int = 0
) -> Dataset:
    """Subsample listed classes to round(proportion * count), at least 1.

    Selection is a seeded shuffle per listed class (ascending class index),
    keeping the chosen examples in their original dataset order. Unlisted
    classes are untouched.
    """
    counts = ds.class_counts()
    for class_index, p in proportions.items():
        if not 0 <= class_index < len(ds.classes):
            raise ValueError(f"class_index {class_index} out of range")
        if not 0.0 < p <= 1.0:
            raise ValueError(f"proportion for class {class_index} must be in (0, 1]")
        if counts[class_index] == 0:
            raise ValueError(f"class {class_index} has no examples to sample")
    rng = Rng(seed)
    keep: set[int] = set()
    listed = set(proportions)
    for class_index in sorted(listed):
        slots = [i for i, ex in enumerate(ds.examples) if ex.class_index == class_index]
        target = max(1, int(proportions[class_index] * len(slots) + 0.5))
        rng.shuffle(slots)
        keep.update(slots[:target])
    examples = tuple(
        ex
        for i, ex in enumerate(ds.examples)
        if ex.class_index not in listed or i in keep
    )
    return Dataset(ds.name, ds.classes, examples)


# --- serialization ---------------------------------------------------------

def dataset_save(ds: Dataset) -> str:
    doc = {
        "format_version": DATASET_FORMAT_VERSION,
        "name": ds.name,
        "classes": list(ds.classes),
        "examples": [
            {"pixels": [float(v) for v in ex.image], "class_index": ex.class_index}
            for ex in ds.examples
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def dataset_load(text: str) -> Dataset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DocumentError("expected a top-level object")
    version = doc.get("format_version")
    if version != DATASET_FORMAT_VERSION:
        raise DocumentError(
            f"unsupported version {version!r} (expected {DATASET_FORMAT_VERSION})",
            "format_version",
        )
    name = doc.get("name")
    if not isinstance(name, str):
        raise DocumentError("must be a string", "name")
    classes = doc.get("classes")
    if not isinstance(classes, list) or not classes:
        raise DocumentError("must be a nonempty list", "classes")
    if any(not isinstance(c, str) for c in classes):
        raise DocumentError("class names must be strings", "classes")
    if len(set(classes)) != len(classes):
        raise DocumentError("class names must be duplicate-free", "classes")
    examples_doc = doc.get("examples")
    if not isinstance(examples_doc, list):
        raise DocumentError("must be a list", "examples")
    examples = []
    for i, item in enumerate(examples_doc):
        ep = f"examples[{i}]"
        if not isinstance(item, dict):
            raise DocumentError("expected an object", ep)
        pixels = item.get("pixels")
        if not isinstance(pixels, list):
            raise DocumentError("must be a list of 36 numbers", f"{ep}.pixels")
        try:
            image = as_pixels(pixels)
        except ValueError as e:
            raise DocumentError(str(e), f"{ep}.pixels") from e
        class_index = item.get("class_index")
        if (
            not isinstance(class_index, int)
            or isinstance(class_index, bool)
            or not 0 <= class_index < len(classes)
        ):
            raise DocumentError(
                f"must be an integer in [0, {len(classes)})", f"{ep}.class_index"
            )
        examples.append(LabeledImage(image, class_index, classes[class_index]))
    ds = Dataset(name, tuple(classes), tuple(examples))
    _validate_dataset(ds)
    return ds
