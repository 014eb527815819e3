"""Smoke test for the Python extension.

Build and stage the module first:

    cargo build --release -p nested-control-py --features extension-module
    cp target/release/libnested_control_py.so python/nested_control_py.so
"""

import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import nested_control_py as nc


def main():
    names = [name for name, _ in nc.list_scenarios()]
    assert "example-d1" in names, names
    print(f"{len(names)} scenarios")

    config = {"scenario": "example-d1", "controller": "oen_ftrl", "horizon": 100, "seeds": [3]}
    (summary, csv), = nc.run_config(json.dumps(config))
    summary = json.loads(summary)
    rows = csv.strip().splitlines()
    assert len(rows) == 101, len(rows)
    assert rows[0].startswith("t,target_0"), rows[0]
    assert not summary["summary"]["failed"], summary
    print(f"seed {summary['seed']}: regret {summary['summary']['final_regret']:.4e}")

    try:
        nc.run_config(json.dumps({**config, "colour": 1}))
    except ValueError as e:
        assert "colour" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    (passed, line), = nc.accept("pricing")
    print(line)
    print("ok")


if __name__ == "__main__":
    main()
