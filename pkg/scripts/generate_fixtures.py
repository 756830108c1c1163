#!/usr/bin/env python3
"""Regenerate the synthetic fixture files under fixtures/.

The record file mimics the shape of validated supercentenarian death
databases: four countries, yearly death counts growing from single digits
in the late 1960s to the mid-30s by the 1990s, and a sparse extreme tail
(exactly 9 records above age 115).  Contents are fully synthetic, produced
by the package's own seeded simulator, so the files are freely
redistributable and bit-stable.

Run from the repository root:  python scripts/generate_fixtures.py
"""

from pathlib import Path

from mradlab import ExposurePlan, LifeRecord, SimulationConfig, plateau_scenario, simulate_lifetimes
from mradlab.dataio import write_records

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Found by scanning seeds for exactly 9 simulated deaths above age 115.
RECORD_SEED = 17
COUNTRIES = ("FR", "GB", "US", "JP")

YEARLY_COUNTS = (
    (1, 1, 2, 1, 2, 2, 3, 2, 3, 3, 4, 4)      # 1968-1979
    + (4, 5, 5, 6, 6, 7, 7, 8, 8, 9)          # 1980-1989
    + (10, 12, 15, 20, 26, 30, 33, 35, 35, 35)  # 1990-1999
    + (35, 34, 35, 33, 34, 35)                 # 2000-2005
)


def build_records():
    model = plateau_scenario(plateau_q=0.53, transition_age=110.0)
    plan = ExposurePlan(base_age=110.0, start_year=1968, counts=YEARLY_COUNTS)
    config = SimulationConfig(model=model, plan=plan, seed=RECORD_SEED)
    simulated = simulate_lifetimes(config)
    records = []
    for index, record in enumerate(simulated):
        country = COUNTRIES[index % len(COUNTRIES)]
        records.append(LifeRecord(
            record_id=f"{country}{index + 1:04d}",
            birth_date=record.birth_date,
            death_date=record.death_date,
            country=country,
            validated=True,
        ))
    return records


def write_record_fixture():
    records = build_records()
    above_115 = sum(r.age_at_death > 115.0 for r in records)
    if above_115 != 9:
        raise SystemExit(f"expected exactly 9 records above 115, got {above_115}; "
                         "adjust RECORD_SEED")
    with open(FIXTURES / "idl_synthetic.csv", "w", encoding="utf-8", newline="") as fh:
        write_records(records, fh)
    print(f"idl_synthetic.csv: {len(records)} records, {above_115} above age 115")


def write_life_table_fixture():
    rows = [
        (100, 0.30), (101, 0.33), (102, 0.36), (103, 0.40), (104, 0.44),
        (105, 0.48), (106, 0.53), (107, 0.58), (108, 0.64), (109, 0.70),
        (110, 0.77), (111, 0.84), (112, 0.90), (113, 0.95), (114, 0.99),
        (115, 1.0),
    ]
    with open(FIXTURES / "life_table_synthetic.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("age,qx\n")
        for age, q in rows:
            fh.write(f"{age},{q!r}\n")
    print(f"life_table_synthetic.csv: {len(rows)} rows, endpoint at 115")


def write_scenarios_fixture():
    text = (
        "# Example scenario definitions; one block per scenario.\n"
        "[plateau_053]\n"
        "variant = plateau\n"
        "plateau_q = 0.53\n"
        "transition_age = 110\n"
        "\n"
        "[wall_115]\n"
        "variant = hard_limit\n"
        "limit_age = 115\n"
        "\n"
        "[late_decline]\n"
        "variant = decline\n"
        "transition_age = 110\n"
        "decline_rate = 0.1\n"
        "\n"
        "[soft_ceiling]\n"
        "variant = sigmoid\n"
        "asymptote = 1.0\n"
        "transition_age = 110\n"
        "\n"
        "[table_based]\n"
        "variant = life_table\n"
        "table_path = life_table_synthetic.csv\n"
    )
    (FIXTURES / "scenarios.ini").write_text(text)
    print("scenarios.ini: 5 scenarios")


if __name__ == "__main__":
    FIXTURES.mkdir(exist_ok=True)
    write_record_fixture()
    write_life_table_fixture()
    write_scenarios_fixture()
