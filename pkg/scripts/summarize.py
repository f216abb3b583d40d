"""Print one line per experiment from the manifests under an output directory."""

import argparse
import json
from pathlib import Path


def headline(report: dict) -> str:
    for key in ("slope", "violations", "relative_gap", "max_ratio", "frequency"):
        if key in report:
            v = report[key]
            return f"{key}={v:.4g}" if isinstance(v, float) else f"{key}={v}"
    if "reports" in report:
        worst = max(r["rel_residual"] for r in report["reports"])
        return f"worst rel_residual={worst:.2e} over {len(report['reports'])} instances"
    if "error" in report:
        return report["error"]
    return ""


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("root", nargs="?", default="out")
    args = ap.parse_args()
    failed = False
    for manifest in sorted(Path(args.root).glob("*/manifest.json")):
        m = json.loads(manifest.read_text())
        for art in m["artifacts"]:
            rep = json.loads((manifest.parent / art["report"]).read_text())
            mark = {True: "PASS", False: "FAIL", None: "----"}[art["pass"]]
            failed |= art["pass"] is False
            print(f"{mark}  {m['config']:<12} {art['name']:<16} {headline(rep)}")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
