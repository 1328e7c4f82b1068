"""Validate CLI JSON reports for every fixture against the report schema."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    cli, schema_path, dict_dir = sys.argv[1:4]
    schema = json.loads(Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        subprocess.run([cli, "gen-corpus", "--seed", "5", "--out", str(tmp),
                        "--cleartext", "50", "--encrypted", "50"], check=True, capture_output=True)
        runs = []
        for scenario in ("bp-monitor-leaky", "scale-encrypted", "mixed-home"):
            pcap, reg = tmp / f"{scenario}.pcap", tmp / f"{scenario}.ini"
            subprocess.run([cli, "gen-fixture", scenario, "--out", str(pcap), "--registry-out", str(reg)],
                           check=True, capture_output=True)
            base = [cli, "analyze", "--capture", str(pcap), "--registry", str(reg),
                    "--dict-dir", dict_dir, "--format", "json"]
            runs.append((scenario, base))
            runs.append((scenario + "+corpus", base + ["--corpus", str(tmp / "corpus.jsonl")]))
        for name, cmd in runs:
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode > 2:
                print(f"FAIL {name}: exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            errors = list(validator.iter_errors(json.loads(proc.stdout)))
            for err in errors[:5]:
                print(f"FAIL {name}: {'/'.join(map(str, err.absolute_path))}: {err.message}")
            failures += bool(errors)
            if not errors:
                print(f"ok   {name}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
