"""Run every scenario in turn; exit 2 if any scenario check failed."""
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
SCRIPTS = ["fig_hide.py", "fig_recover.py", "fig_two_state.py", "fig_info_sweep.py"]


def main() -> int:
    worst = 0
    for s in SCRIPTS:
        print(f"== {s}", flush=True)
        code = subprocess.call([sys.executable, str(HERE / s), *sys.argv[1:]])
        if code not in (0, 2):
            return code
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
