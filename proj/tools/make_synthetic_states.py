#!/usr/bin/env python3
"""Write data/synthetic_states.csv: a made-up state-by-day panel shaped like the
summary table of the shelter-in-place application (group sizes, per-million
case and test levels by adoption group, travel drops). No real state data.

usage: make_synthetic_states.py [out.csv] [--seed N]
"""
import argparse
import bisect
import csv
import datetime as dt
import math
import random

START = dt.date(2020, 3, 8)
END = dt.date(2020, 4, 20)
ANCHORS = [dt.date(2020, 3, 17) + dt.timedelta(days=5 * k) for k in range(7)]

# group -> (size, population in millions, cum cases pm, cum tests pm, travel)
GROUPS = {
    "never": (10, 2.9, [18.4, 78.4, 313.0, 719.0, 1268.8, 2039.7, 2861.3],
              [806.6, 2311.3, 4912.5, 8346.5, 12650.5, 18615.6, 23841.2],
              [-15.2, -40.2, -37.6, -32.0, -35.2, -42.2, -33.2]),
    "2020-03-18": (4, 20.1, [38.7, 333.9, 1024.0, 2051.8, 3358.6, 4711.9, 5913.5],
                   [349.7, 1444.4, 3501.2, 5816.3, 9974.8, 13966.3, 18099.2],
                   [-26.0, -56.0, -48.5, -44.8, -50.2, -54.2, -53.2]),
    "2020-03-23": (14, 4.6, [166.9, 408.9, 863.2, 1525.3, 2435.0, 3262.8, 3935.1],
                   [1380.2, 3379.2, 6764.2, 10965.9, 15748.3, 20716.4, 25434.3],
                   [-19.4, -40.6, -47.3, -39.5, -40.4, -45.9, -37.9]),
    "2020-03-28": (12, 5.1, [26.0, 90.8, 282.0, 644.8, 1190.3, 1869.3, 2411.5],
                   [725.4, 2009.9, 4952.6, 8537.1, 12887.0, 18009.4, 21773.1],
                   [-16.8, -39.9, -38.6, -38.4, -38.8, -43.6, -34.7]),
    "2020-04-02": (7, 10.9, [15.1, 70.1, 273.3, 636.4, 1109.7, 1739.0, 2238.6],
                   [453.7, 1668.7, 3945.4, 6980.5, 11416.6, 16101.6, 21032.1],
                   [-12.1, -39.6, -37.1, -28.6, -40.3, -42.1, -31.4]),
    "2020-04-07": (1, 5.1, [6.4, 37.9, 88.6, 251.1, 398.0, 622.9, 710.1],
                   [66.8, 322.6, 536.6, 1228.7, 3685.6, 5844.8, 6746.0],
                   [-8.0, -39.0, -32.0, -30.0, -33.0, -41.0, -26.0]),
}

EARLY = [("CA", "2020-03-19", "West"), ("IL", "2020-03-21", "Midwest"),
         ("NJ", "2020-03-21", "Northeast"), ("NY", "2020-03-22", "Northeast")]
OTHER = ["AL", "AZ", "AR", "CO", "CT", "DE", "FL", "GA", "HI", "ID", "IN", "IA", "KS", "KY",
         "LA", "ME", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NM", "NC", "ND", "OH",
         "OK", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY",
         "DC", "PR"]
REGIONS = ["Midwest", "Northeast", "South", "West"]


def log_interp(values, day):
    """Log-linear interpolation through the anchor dates, extended linearly in logs."""
    x = [(a - START).days for a in ANCHORS]
    t = (day - START).days
    k = min(max(bisect.bisect_right(x, t) - 1, 0), len(x) - 2)
    lo, hi = math.log(values[k]), math.log(values[k + 1])
    return math.exp(lo + (hi - lo) * (t - x[k]) / (x[k + 1] - x[k]))


def lin_interp(values, day):
    x = [(a - START).days for a in ANCHORS]
    t = (day - START).days
    if t <= x[0]:
        return values[0] * max(t, 0) / x[0]
    k = min(bisect.bisect_right(x, t) - 1, len(x) - 2)
    return values[k] + (values[k + 1] - values[k]) * (t - x[k]) / (x[k + 1] - x[k])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", nargs="?", default="data/synthetic_states.csv")
    ap.add_argument("--seed", type=int, default=20200318)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    names = iter(OTHER)
    states = []
    for group, (size, pop_m, cases, tests, travel) in GROUPS.items():
        for k in range(size):
            if group == "2020-03-18":
                name, policy, region = EARLY[k]
            else:
                name = next(names)
                region = rng.choice(REGIONS)
                policy = "" if group == "never" else (
                    dt.date.fromisoformat(group) + dt.timedelta(days=rng.randrange(5))).isoformat()
            pop = max(0.3, pop_m * math.exp(rng.gauss(0.0, 0.5))) * 1e6
            states.append(dict(name=name, policy=policy, region=region, pop=round(pop),
                               cases=cases, tests=tests, travel=travel,
                               case_mult=math.exp(rng.gauss(0.0, 0.35)),
                               test_mult=math.exp(rng.gauss(0.0, 0.25)),
                               travel_shift=rng.gauss(0.0, 4.0)))

    days = [START + dt.timedelta(days=d) for d in range((END - START).days + 1)]
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["location", "date", "cum_cases", "cum_tests", "population", "outcome", "region", "policy_date"])
        for s in sorted(states, key=lambda s: s["name"]):
            cum_c = cum_t = 0
            for day in days:
                c = max(cum_c, round(log_interp(s["cases"], day) * s["case_mult"] * s["pop"] / 1e6))
                t = max(cum_t, round(log_interp(s["tests"], day) * s["test_mult"] * s["pop"] / 1e6))
                reported = c
                if cum_c > 50 and rng.random() < 0.02:
                    reported = cum_c - rng.randrange(1, 10)   # data revision: cumulative count dips
                cum_c, cum_t = c, t
                travel = lin_interp(s["travel"], day) + s["travel_shift"] + rng.gauss(0.0, 2.0)
                w.writerow([s["name"], day.isoformat(), reported, t, s["pop"], f"{travel:.1f}", s["region"],
                            s["policy"]])


if __name__ == "__main__":
    main()
