"""Total stored information against the second-kick delay, with both baselines."""
import numpy as np

from _common import parse, pyplot, run, table


def main():
    args = parse(__doc__)
    res, out = run("info-sweep", args)
    plt = pyplot(args)
    if plt is None:
        return 0 if res.ok else 2
    header, rows = table(out / "info_sweep.csv")
    data = np.array([[float(v) for v in r] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(data[:, 0], data[:, 1], "o-", ms=3, label="two kicks")
    ax.axhline(data[0, 2], color="k", ls="--", label="no kick")
    ax.axhline(data[0, 3], color="tab:red", ls=":", label="one kick")
    ax.set_xlabel("T2 (ps)")
    ax.set_ylabel("total information (bits)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "info_sweep.png", dpi=150)
    return 0 if res.ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
