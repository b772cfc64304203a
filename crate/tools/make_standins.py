#!/usr/bin/env python3
"""Regenerate the bundled synthetic stand-in effort datasets.

The public effort tables (kemerer, albrecht, ...) are not redistributed here.
Each stand-in keeps the original column layout, row count and per-column
range/mean/std, and draws effort from a noisy multiplicative size model.
Output is deterministic: running this script twice yields identical files.

    python3 tools/make_standins.py crates/core/data
"""

import sys
from pathlib import Path

import numpy as np

# (name, kind, min, max, mean, std, integer)
# kinds: numeric | ordinal | categorical | excluded | target
CLASSIC = {
    "kemerer": dict(
        rows=15,
        sigma=0.35,
        columns=[
            ("Langu", "categorical", 1, 3, 1.2, 0.6, True),
            ("Hdware", "categorical", 1, 6, 2.3, 1.7, True),
            ("Duration", "excluded", 5, 31, 14.3, 7.5, True),
            ("KSLOC", "excluded", 39, 450, 186.6, 136.8, True),
            ("AdjFP", "numeric", 100, 2307, 999.1, 589.6, True),
            ("RAWFP", "excluded", 97, 2284, 993.9, 597.4, True),
            ("Effort", "target", 23, 1107, 219.2, 263.1, False),
        ],
        drivers={"AdjFP": 1.0},
    ),
    "albrecht": dict(
        rows=24,
        sigma=0.3,
        columns=[
            ("Input", "numeric", 7, 193, 40.2, 36.9, True),
            ("Output", "numeric", 12, 150, 47.2, 35.2, True),
            ("Inquiry", "numeric", 0, 75, 16.9, 19.3, True),
            ("File", "numeric", 3, 60, 17.4, 15.5, True),
            ("FPAdj", "excluded", 0.75, 1.2, 1.0, 0.1, False),
            ("RawFPs", "excluded", 190, 1902, 638.5, 452.7, True),
            ("AdjFP", "excluded", 199, 1902, 647.6, 488.0, True),
            ("Effort", "target", 0.5, 105, 21.9, 28.4, False),
        ],
        drivers={"Input": 0.45, "Output": 0.35, "File": 0.3, "Inquiry": 0.1},
    ),
    "miyazaki": dict(
        rows=48,
        sigma=0.35,
        columns=[
            ("KLOC", "excluded", 7, 390, 63.4, 71.9, True),
            ("SCRN", "numeric", 0, 150, 28.4, 30.4, True),
            ("FORM", "numeric", 0, 76, 20.9, 18.1, True),
            ("FILE", "numeric", 2, 100, 27.7, 20.4, True),
            ("ESCRN", "numeric", 0, 2113, 473.0, 514.3, True),
            ("EFORM", "numeric", 0, 1566, 447.1, 389.6, True),
            ("EFILE", "numeric", 57, 3800, 936.6, 709.4, True),
            ("Effort", "target", 6, 340, 55.6, 60.1, False),
        ],
        drivers={"EFILE": 0.5, "ESCRN": 0.25, "EFORM": 0.2, "SCRN": 0.1},
    ),
    "maxwell": dict(
        rows=62,
        sigma=0.35,
        columns=[
            ("App", "categorical", 1, 5, 2.4, 1.0, True),
            ("Har", "categorical", 1, 5, 2.6, 1.0, True),
            ("Dba", "categorical", 0, 4, 1.0, 0.4, True),
            ("Ifc", "categorical", 1, 2, 1.9, 0.2, True),
            ("Source", "categorical", 1, 2, 1.9, 0.3, True),
            ("Telon", "categorical", 0, 1, 0.2, 0.4, True),
            ("Nlan", "ordinal", 1, 4, 2.5, 1.0, True),
            ("T01", "ordinal", 1, 5, 3.0, 1.0, True),
            ("T02", "ordinal", 1, 5, 3.0, 0.7, True),
            ("T03", "ordinal", 2, 5, 3.0, 0.9, True),
            ("T04", "ordinal", 2, 5, 3.2, 0.7, True),
            ("T05", "ordinal", 1, 5, 3.0, 0.7, True),
            ("T06", "ordinal", 1, 4, 2.9, 0.7, True),
            ("T07", "ordinal", 1, 5, 3.2, 0.9, True),
            ("T08", "ordinal", 2, 5, 3.8, 1.0, True),
            ("T09", "ordinal", 2, 5, 4.1, 0.7, True),
            ("T10", "ordinal", 2, 5, 3.6, 0.9, True),
            ("T11", "ordinal", 2, 5, 3.4, 1.0, True),
            ("T12", "ordinal", 2, 5, 3.8, 0.7, True),
            ("T13", "ordinal", 1, 5, 3.1, 1.0, True),
            ("T14", "ordinal", 1, 5, 3.3, 1.0, True),
            ("Duration", "excluded", 4, 54, 17.2, 10.7, True),
            ("Size", "numeric", 48, 3643, 673.3, 784.1, True),
            ("Time", "excluded", 1, 9, 5.6, 2.1, True),
            ("Effort", "target", 583, 63694, 8223, 10500, False),
        ],
        drivers={"Size": 0.9},
        ordinal_effects={"T07": 0.08, "T08": 0.06, "T10": -0.06, "T11": 0.1},
    ),
    "desharnais": dict(
        rows=77,
        sigma=0.35,
        columns=[
            ("TeamExp", "ordinal", 0, 4, 2.3, 1.3, True),
            ("MngExp", "ordinal", 0, 7, 2.6, 1.5, True),
            ("Length", "excluded", 1, 36, 11.3, 6.8, True),
            ("Transactions", "numeric", 9, 886, 177.5, 146.1, True),
            ("Entities", "numeric", 7, 387, 120.5, 86.1, True),
            ("AdjPts", "numeric", 73, 1127, 298.0, 182.3, True),
            ("Effort", "target", 546, 23940, 4834, 4188, False),
        ],
        drivers={"AdjPts": 0.6, "Transactions": 0.25, "Entities": 0.15},
        ordinal_effects={"TeamExp": -0.08, "MngExp": -0.05},
    ),
    "kitchenham": dict(
        rows=145,
        sigma=0.3,
        columns=[
            ("code", "categorical", 1, 6, 2.1, 0.9, True),
            ("type", "categorical", 0, 6, 2.4, 0.9, True),
            ("duration", "excluded", 37, 946, 206.4, 134.1, True),
            ("fun_pts", "numeric", 15, 18137, 527.7, 1522, True),
            ("estimate", "excluded", 121, 79870, 2856, 6789, True),
            ("esti_mtd", "excluded", 1, 5, 2.5, 0.9, True),
            ("Effort", "target", 219, 113930, 3113, 9598, False),
        ],
        drivers={"fun_pts": 0.95},
    ),
    "china": dict(
        rows=499,
        sigma=0.55,
        columns=[
            ("ID", "excluded", 1, 499, 250.0, 144.2, True),
            ("AFP", "excluded", 9, 17518, 486.9, 1059, True),
            ("Input", "numeric", 0, 9404, 167.1, 486.3, True),
            ("Output", "numeric", 0, 2455, 113.6, 221.3, True),
            ("Enquiry", "numeric", 0, 952, 61.6, 105.4, True),
            ("File", "numeric", 0, 2955, 91.2, 210.3, True),
            ("Interface", "numeric", 0, 1572, 24.2, 85.0, True),
            ("Added", "excluded", 0, 13580, 360.4, 829.8, True),
            ("Changed", "excluded", 0, 5193, 85.1, 290.9, True),
            ("Deleted", "excluded", 0, 2657, 12.4, 124.2, True),
            ("PDR_A", "excluded", 0, 84, 11.8, 12.1, False),
            ("PDR_U", "excluded", 0, 97, 12.1, 12.8, False),
            ("NPDR_A", "excluded", 0, 101, 13.3, 14.0, False),
            ("NPDU_U", "excluded", 0, 108, 13.6, 14.8, False),
            ("Resource", "ordinal", 1, 4, 1.5, 0.8, True),
            ("Dev_Type", "excluded", 0, 0, 0.0, 0.0, True),
            ("Duration", "excluded", 1, 84, 8.7, 7.3, True),
            ("N_effort", "excluded", 31, 54620, 4278, 7071, True),
            ("Effort", "target", 26, 54620, 3921, 6481, False),
        ],
        drivers={"Input": 0.3, "Output": 0.25, "File": 0.25, "Enquiry": 0.1, "Interface": 0.1},
        ordinal_effects={"Resource": 0.15},
    ),
}

SCALE_FACTORS = ["prec", "flex", "resl", "team", "pmat"]
EFFORT_MULTIPLIERS = [
    "rely", "cplx", "data", "ruse", "time", "stor", "pvol", "acap", "pcap",
    "pcon", "aexp", "plex", "ltex", "tool", "sced", "site", "docu",
]
# Valid ordinal domains of the bundled rating table (1 = very low ... 6 = extra high).
DOMAIN = {
    "prec": (1, 6), "flex": (1, 6), "resl": (1, 6), "team": (1, 6), "pmat": (1, 6),
    "rely": (1, 5), "cplx": (1, 6), "data": (2, 5), "ruse": (2, 6), "time": (3, 6),
    "stor": (3, 6), "pvol": (2, 5), "acap": (1, 5), "pcap": (1, 5), "pcon": (1, 5),
    "aexp": (1, 5), "plex": (1, 5), "ltex": (1, 5), "tool": (1, 5), "sced": (1, 5),
    "site": (1, 6), "docu": (1, 5),
}
COCOMO = {
    "cocomo81": dict(rows=63, kloc=(2.0, 1150.0, 77.2), sigma=0.75, a=2.6, b=0.95),
    "nasa93": dict(rows=93, kloc=(0.9, 980.0, 94.0), sigma=0.55, a=3.1, b=0.88),
}


def bounded_draw(rng, lo, hi, mean, std, n, integer):
    """Moment-matched scaled beta on [lo, hi], with the extremes pinned."""
    if hi <= lo:
        return np.full(n, float(lo))
    m = (mean - lo) / (hi - lo)
    v = (std / (hi - lo)) ** 2
    m = min(max(m, 1e-3), 1 - 1e-3)
    common = m * (1 - m) / v - 1 if v > 0 else 50.0
    if common <= 0:
        common = 0.5
    a = max(m * common, 0.05)
    b = max((1 - m) * common, 0.05)
    x = lo + (hi - lo) * rng.beta(a, b, size=n)
    if n >= 2:
        x[np.argmin(x)] = lo
        x[np.argmax(x)] = hi
    if integer:
        x = np.round(x)
    return x


def categorical_draw(rng, lo, hi, mean, n):
    levels = np.arange(int(lo), int(hi) + 1)
    # Geometric-ish weights centred on the published mean.
    w = np.exp(-np.abs(levels - mean))
    w /= w.sum()
    x = rng.choice(levels, size=n, p=w).astype(float)
    x[0] = lo
    x[-1] = hi
    return x


def fmt(v, integer):
    if integer:
        return str(int(round(v)))
    return f"{v:.2f}".rstrip("0").rstrip(".")


def write_dataset(out, name, provenance, header, kinds, rows, integer_cols, note):
    with open(out / f"{name}.csv", "w") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(fmt(v, integer_cols[i]) for i, v in enumerate(r)) + "\n")
    with open(out / f"{name}.toml", "w") as f:
        f.write(f"# {note}\n")
        f.write(f'name = "{name}"\n')
        f.write(f'provenance = "{provenance}"\n')
        f.write("synthetic = true\n")
        target = [h for h, k in zip(header, kinds) if k == "target"][0]
        f.write(f'target = "{target}"\n')
        for h, k in zip(header, kinds):
            f.write(f'\n[[columns]]\nname = "{h}"\nkind = "{k}"\n')


def classic(out, name, spec):
    rng = np.random.default_rng(sum(map(ord, name)) * 7919)
    n = spec["rows"]
    cols = {}
    for cname, kind, lo, hi, mean, std, integer in spec["columns"]:
        if kind == "target":
            continue
        if kind == "categorical":
            cols[cname] = categorical_draw(rng, lo, hi, mean, n)
        else:
            cols[cname] = bounded_draw(rng, lo, hi, mean, std, n, integer)
    # Correlate secondary size measures with the first driver so the data
    # looks like a size-driven table rather than independent noise.
    drivers = spec["drivers"]
    first = next(iter(drivers))
    base = np.argsort(np.argsort(cols[first]))
    for cname in drivers:
        if cname == first:
            continue
        rank_mix = 0.6 * base + 0.4 * rng.permutation(n)
        order = np.argsort(np.argsort(rank_mix))
        cols[cname] = np.sort(cols[cname])[order]

    log_e = np.zeros(n)
    for cname, w in drivers.items():
        x = cols[cname]
        scale = max(np.median(x), 1.0)
        log_e += w * np.log1p(x / scale)
    for cname, w in spec.get("ordinal_effects", {}).items():
        log_e += w * (cols[cname] - cols[cname].mean())
    for cname, kind, lo, hi, *_ in spec["columns"]:
        if kind == "categorical":
            effects = rng.normal(0.0, 0.25, size=int(hi) - int(lo) + 1)
            log_e += effects[(cols[cname] - lo).astype(int)]
    log_e += rng.normal(0.0, spec["sigma"], size=n)
    effort = np.exp(log_e)
    tlo, thi, tmean = [(lo, hi, mean) for _, k, lo, hi, mean, *_ in spec["columns"] if k == "target"][0]
    effort *= tmean / effort.mean()
    effort = np.clip(effort, tlo, thi)

    header, kinds, integer_cols, matrix = [], [], [], []
    for cname, kind, lo, hi, mean, std, integer in spec["columns"]:
        header.append(cname)
        kinds.append(kind)
        integer_cols.append(integer if kind != "target" else False)
        matrix.append(effort if kind == "target" else cols[cname])
    rows = np.array(matrix).T
    write_dataset(out, name, "classic", header, kinds, rows, integer_cols,
                  f"Synthetic stand-in for the public {name} table: same columns, "
                  f"row count and per-column ranges; effort drawn from a noisy size model.")


def cocomo(out, name, spec):
    rng = np.random.default_rng(sum(map(ord, name)) * 104729)
    n = spec["rows"]
    lo, hi, mean = spec["kloc"]
    kloc = np.exp(rng.normal(np.log(mean) - 0.8, 1.2, size=n))
    kloc = np.clip(kloc, lo, hi)
    kloc[0], kloc[-1] = lo, hi
    header = SCALE_FACTORS + EFFORT_MULTIPLIERS + ["kloc", "months"]
    ratings = {}
    for attr in SCALE_FACTORS + EFFORT_MULTIPLIERS:
        dlo, dhi = DOMAIN[attr]
        centre = min(max(3, dlo), dhi)
        r = np.clip(np.round(rng.normal(centre, 0.9, size=n)), dlo, dhi)
        ratings[attr] = r
    # The generating model deliberately differs from the shipped rating
    # table: each attribute gets its own per-step effect.
    log_e = np.log(spec["a"]) + spec["b"] * np.log(kloc)
    for attr in EFFORT_MULTIPLIERS:
        step = rng.uniform(-0.15, 0.15)
        log_e += step * (ratings[attr] - 3)
    sf_sum = sum((6 - ratings[a]) * rng.uniform(0.8, 1.6) for a in SCALE_FACTORS)
    log_e += 0.01 * sf_sum * np.log(kloc)
    log_e += rng.normal(0.0, spec["sigma"], size=n)
    months = np.exp(log_e)
    rows = np.column_stack([ratings[a] for a in SCALE_FACTORS + EFFORT_MULTIPLIERS] + [kloc, months])
    kinds = ["ordinal"] * 22 + ["numeric", "target"]
    integer_cols = [True] * 22 + [False, False]
    write_dataset(out, name, "cocomo", header, kinds, rows, integer_cols,
                  f"Synthetic stand-in for the public {name} table in COCOMO-II layout "
                  f"(5 scale factors, 17 effort multipliers, kloc, months).")


def activity(out, name, months, seed):
    rng = np.random.default_rng(seed)
    header = [
        "dates", "monthly_commits", "monthly_commit_comments", "monthly_contributors",
        "monthly_open_PRs", "monthly_closed_PRs", "monthly_merged_PRs", "monthly_PR_mergers",
        "monthly_PR_comments", "monthly_open_issues", "monthly_closed_issues",
        "monthly_issue_comments", "monthly_stargazer", "monthly_forks", "monthly_watchers",
    ]
    level = rng.uniform(2.5, 4.0)
    year, month = 2015, 1
    lines = [",".join(header)]
    for _ in range(months):
        level = 0.85 * level + 0.15 * 3.3 + rng.normal(0, 0.25)
        commits = int(rng.poisson(np.exp(level)))
        contributors = int(min(commits, rng.poisson(1 + commits / 12)))
        open_prs = int(rng.poisson(1 + commits / 8))
        closed = int(rng.poisson(open_prs * 0.9 + 0.1))
        merged = int(rng.binomial(closed, 0.7))
        mergers = int(min(merged, rng.poisson(1 + merged / 6)))
        pr_comments = int(rng.poisson(2 * open_prs + 1))
        open_issues = int(rng.poisson(2 + commits / 10))
        closed_issues = int(rng.poisson(open_issues * 0.8 + 0.1))
        issue_comments = int(rng.poisson(3 * open_issues + 1))
        commit_comments = int(rng.poisson(commits / 20 + 0.2))
        stars = int(rng.poisson(5 + commits / 3))
        forks = int(rng.poisson(1 + stars / 6))
        watchers = stars
        next_month = month % 12 + 1
        next_year = year + (1 if month == 12 else 0)
        last_day = (np.datetime64(f"{next_year:04d}-{next_month:02d}-01") - np.timedelta64(1, "D"))
        lines.append(",".join(str(v) for v in [
            str(last_day), commits, commit_comments, contributors, open_prs, closed, merged,
            mergers, pr_comments, open_issues, closed_issues, issue_comments, stars, forks,
            watchers,
        ]))
        year, month = next_year, next_month
    (out / f"{name}.csv").write_text("\n".join(lines) + "\n")


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/data")
    out.mkdir(parents=True, exist_ok=True)
    for name, spec in CLASSIC.items():
        classic(out, name, spec)
    for name, spec in COCOMO.items():
        cocomo(out, name, spec)
    act = out / "activity"
    act.mkdir(exist_ok=True)
    for i, name in enumerate(["repo_alpha", "repo_beta", "repo_gamma"]):
        activity(act, name, 36, 1000 + i)


if __name__ == "__main__":
    main()
