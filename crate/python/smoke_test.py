"""Smoke test for the `duet` extension module.

Build the module first:

    cargo build --release -p duet-python --features extension-module

then run `python3 python/smoke_test.py [path/to/libduet.so]`.
"""

import importlib.util
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
SUFFIXES = {"linux": "libduet.so", "darwin": "libduet.dylib", "win32": "duet.dll"}

REFERENCE = """@startuml
class Library {
  +name : String
}
class Book {
  +title : String
  +isbn : String
}
Library "1" *-- "0..*" Book
@enduml
"""

STUDENT = """@startuml
class Library {
  +name : String
}
class Book {
  +title : String
}
Library "1" o-- "1..*" Book
@enduml
"""


def locate_library():
    if len(sys.argv) > 1:
        return pathlib.Path(sys.argv[1])
    name = SUFFIXES.get(sys.platform, "libduet.so")
    for profile in ("release", "debug"):
        candidate = ROOT / "target" / profile / name
        if candidate.exists():
            return candidate
    sys.exit("libduet not found; build it with cargo first")


def load(library):
    staging = pathlib.Path(tempfile.mkdtemp())
    target = staging / ("duet.pyd" if sys.platform == "win32" else "duet.so")
    shutil.copy(library, target)
    spec = importlib.util.spec_from_file_location("duet", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    duet = load(locate_library())

    reference = duet.Diagram.parse(REFERENCE)
    student = duet.Diagram.parse(STUDENT, "class")
    assert reference.kind == "class_diagram", reference.kind
    assert reference.node_names == ["Book", "Library"], reference.node_names
    assert duet.Diagram.parse(reference.to_plantuml()) == reference

    result = duet.compare(reference, student)
    changes = {(d["category"], d["change"]) for d in result["diff_report"]["differences"]}
    assert ("attributes", "missing") in changes, changes
    assert ("relationships", "modified") in changes, changes
    codes = duet.classify(reference, student)
    assert "AttrError" in codes and "WrongMultiplicity" in codes, codes
    student_md = result["feedback"]["student_markdown"]
    assert duet.check_neutrality(student_md) == []
    assert duet.check_neutrality("This is wrong.") == [("wrong", 1, 9)]

    assert duet.levenshtein("kitten", "sitting") == 3
    assert duet.name_similarity("Customer", "customer") == 1.0
    assert abs(duet.name_similarity("Book", "Books") - 0.8) < 1e-12

    try:
        duet.Diagram.parse("@startuml\nclass {\n@enduml\n")
    except ValueError as e:
        assert "line" in str(e).lower() or ":" in str(e)
    else:
        raise AssertionError("parse error not raised")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
