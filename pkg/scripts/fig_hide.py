"""Single kick at the hiding delay: pair amplitudes, 31p pairs highlighted."""
import numpy as np

from _common import parse, pyplot, run, table


def main():
    args = parse(__doc__)
    res, out = run("hide", args)
    plt = pyplot(args)
    if plt is None:
        return 0 if res.ok else 2
    header, rows = table(out / "hide_pairs.csv")
    labels = [f"{r[0]}-{r[1]}" for r in rows]
    amp = np.array([float(r[header.index("amplitude")]) for r in rows])
    std = np.array([float(r[header.index("amplitude_std")]) for r in rows])
    colors = ["tab:red" if "31p" in lab else "tab:blue" for lab in labels]
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.bar(labels, amp, yerr=2 * std, color=colors)
    ax.set_ylabel("correlation amplitude")
    ax.set_title(f"one kick at T1 = {res.values['t1']:.2f} ps (error bars: vanish threshold)")
    ax.tick_params(axis="x", rotation=60)
    fig.tight_layout()
    fig.savefig(out / "hide.png", dpi=150)
    return 0 if res.ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
