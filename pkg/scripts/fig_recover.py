"""Second kick: per-state phase uncertainty before and after."""
import numpy as np

from _common import parse, pyplot, run, table


def main():
    args = parse(__doc__)
    res, out = run("recover", args)
    plt = pyplot(args)
    if plt is None:
        return 0 if res.ok else 2
    header, rows = table(out / "recover_compare.csv")
    rows = [r for r in rows if r[0] != "TOTAL"]
    states = [r[0] for r in rows]
    d1 = np.degrees([float(r[1]) for r in rows])
    d2 = np.degrees([float(r[2]) for r in rows])
    x = np.arange(len(states))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(x - 0.2, d1, 0.4, label="after first kick")
    ax.bar(x + 0.2, d2, 0.4, label="after second kick")
    ax.set_xticks(x, states)
    ax.set_ylabel("phase uncertainty (deg)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "recover.png", dpi=150)
    return 0 if res.ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
