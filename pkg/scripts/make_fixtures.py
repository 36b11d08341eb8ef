"""Regenerate the sample CSV fixtures in data/ (deterministic)."""
import csv
import datetime
import pathlib

from armasel import ArmaCoefficients, simulate

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"
START = datetime.date(2020, 9, 8)
ROWS = 260


def business_days(start: datetime.date, count: int):
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += datetime.timedelta(days=1)
    return out


def write_fixture(name, coeffs, base, scale, seed):
    series = simulate(coeffs, ROWS, seed=seed)
    dates = business_days(START, ROWS)
    path = DATA / name
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", "close"])
        for day, x in zip(dates, series.values):
            writer.writerow([day.isoformat(), f"{base + scale * x:.2f}"])
    print(path)


def main():
    DATA.mkdir(exist_ok=True)
    write_fixture("sample_index.csv", ArmaCoefficients([0.7], [0.3], 1.0), 3300.0, 40.0, 2020)
    write_fixture("sample_stock.csv", ArmaCoefficients([0.6, 0.2], [0.4], 1.0), 120.0, 3.0, 2021)


if __name__ == "__main__":
    main()
