"""27p/32p control: correlation amplitude and 32p amplitude for each stage."""
from _common import parse, pyplot, run, table


def main():
    args = parse(__doc__)
    res, out = run("two-state", args)
    plt = pyplot(args)
    if plt is None:
        return 0 if res.ok else 2
    header, rows = table(out / "two_state.csv")
    stages = [r[0] for r in rows]
    amp = [float(r[1]) for r in rows]
    c32 = [float(r[-1]) for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    axes[0].bar(stages, amp)
    axes[0].set_ylabel("27p-32p correlation amplitude")
    axes[1].bar(stages, c32, color="tab:orange")
    axes[1].set_ylabel("|c(32p)|")
    fig.tight_layout()
    fig.savefig(out / "two_state.png", dpi=150)
    return 0 if res.ok else 2


if __name__ == "__main__":
    raise SystemExit(main())
