#!/usr/bin/env python3
"""Regenerates scripts/: synthetic labelled frames plus replay scripts.

Each scene is a list of shots; every shot becomes one 640x480 JPEG with a
flat backdrop, a few shapes and a caption naming what is in view. Output is
deterministic, so re-running it leaves the tree unchanged.
"""
import json
import random
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent / "scripts"

SCENES = {
    "lab": {
        "backdrop": (196, 206, 214),
        "shots": ["desk with two monitors", "person in a red hoodie", "person waving",
                  "whiteboard with diagrams", "robot arm on a table", "person holding a mug"],
        "lines": {1: "Hi! Can you see me?", 3: "What is on the board?", 5: "Do you like coffee?"},
    },
    "kitchen_morning": {
        "backdrop": (236, 222, 190),
        "shots": ["stove with a kettle", "fruit bowl with bananas", "person in an apron",
                  "open fridge", "cutting board with bread", "person pouring tea"],
        "lines": {2: "Good morning!", 4: "What should I make for breakfast?"},
    },
    "kitchen_evening": {
        "backdrop": (120, 104, 92),
        "shots": ["dim kitchen lights", "pot on the stove", "person with glasses",
                  "dishes in the sink", "window at night"],
        "lines": {0: "Hello again.", 3: "I have to wash all of these."},
    },
    "entrance": {
        "backdrop": (170, 180, 150),
        "shots": ["front door", "coat rack with a yellow jacket", "person with a backpack",
                  "shoes on a mat", "umbrella stand"],
        "lines": {2: "I am heading out.", 4: "Will it rain today?"},
    },
    "bathroom": {
        "backdrop": (210, 230, 240),
        "shots": ["mirror above a sink", "toothbrush cup", "stack of towels", "person brushing hair"],
        "lines": {3: "Do I look ready?"},
    },
    "bedroom": {
        "backdrop": (200, 180, 210),
        "shots": ["bed with a blue blanket", "bookshelf", "person reading a book",
                  "lamp on a nightstand", "cat on the pillow"],
        "lines": {2: "This book is great.", 4: "Say good night to the cat."},
    },
}

INTERVAL_MS = 5000


def draw_shot(path: Path, backdrop, caption: str, seed: int) -> None:
    rng = random.Random(seed)
    img = Image.new("RGB", (640, 480), backdrop)
    d = ImageDraw.Draw(img)
    for _ in range(5):
        x0, y0 = rng.randrange(0, 560), rng.randrange(0, 380)
        x1, y1 = x0 + rng.randrange(30, 160), y0 + rng.randrange(30, 120)
        color = tuple(rng.randrange(0, 256) for _ in range(3))
        if rng.random() < 0.5:
            d.rectangle([x0, y0, x1, y1], fill=color)
        else:
            d.ellipse([x0, y0, x1, y1], fill=color)
    d.rectangle([0, 430, 640, 480], fill=(20, 20, 20))
    d.text((12, 448), caption, fill=(255, 255, 255))
    img.save(path, "JPEG", quality=85)


def scene_script(name: str, scene: dict) -> dict:
    frame_dir = ROOT / "frames" / name
    frame_dir.mkdir(parents=True, exist_ok=True)
    events = []
    for i, caption in enumerate(scene["shots"]):
        file = frame_dir / f"{i:02d}.jpg"
        draw_shot(file, scene["backdrop"], caption, seed=i * 7919 + len(name))
        at = i * INTERVAL_MS
        events.append({"at_ms": at, "frame": f"frames/{name}/{file.name}"})
        if i in scene["lines"]:
            events.append({"at_ms": at + 2000, "say": scene["lines"][i]})
    return {"n": 4, "m": 3, "interval_ms": INTERVAL_MS, "events": events}


def trace_script() -> dict:
    # Three frames, one exchange, two more frames; n=3, m=2.
    shots = ["red ball", "red ball rolling", "cat next to the ball", "cat on the sofa", "empty sofa"]
    frame_dir = ROOT / "frames" / "trace"
    frame_dir.mkdir(parents=True, exist_ok=True)
    events = []
    for i, caption in enumerate(shots):
        file = frame_dir / f"{i + 1:02d}.jpg"
        draw_shot(file, (230, 230, 230), caption, seed=101 + i)
        events.append({"at_ms": i * INTERVAL_MS, "frame": f"frames/trace/{file.name}"})
        if i == 2:
            events.append({"at_ms": i * INTERVAL_MS + 2000, "say": "Look, a cat!"})
    return {"n": 3, "m": 2, "interval_ms": INTERVAL_MS, "events": events}


def main() -> None:
    ROOT.mkdir(exist_ok=True)
    (ROOT / "summarisation_trace.json").write_text(json.dumps(trace_script(), indent=2) + "\n")
    for name, scene in SCENES.items():
        (ROOT / f"{name}.json").write_text(json.dumps(scene_script(name, scene), indent=2) + "\n")


if __name__ == "__main__":
    main()
