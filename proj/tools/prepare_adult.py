#!/usr/bin/env python3
"""Convert the raw UCI Adult files (adult.data + adult.test) into data/adult.csv.

education is dropped (it is a relabeling of education-num); sex and
native-country are encoded as 0/1 indicators. Unknown cells ("?") become empty.
"""
import csv
import sys

COLUMNS = ["age", "workclass", "fnlwgt", "education_num", "marital_status",
           "occupation", "relationship", "race", "sex_male", "capital_gain",
           "capital_loss", "hours_per_week", "native_us", "label"]


def rows(path):
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            c = [v.strip() for v in line.split(",")]
            c = ["" if v == "?" else v for v in c]
            (age, workclass, fnlwgt, _education, education_num, marital,
             occupation, relationship, race, sex, gain, loss, hours,
             country, income) = c
            native = "" if country == "" else ("1" if country == "United-States" else "0")
            yield [age, workclass, fnlwgt, education_num, marital, occupation,
                   relationship, race, "1" if sex == "Male" else "0", gain, loss,
                   hours, native, income.rstrip(".")]


def main(argv):
    if len(argv) != 4:
        sys.exit("usage: prepare_adult.py adult.data adult.test out.csv")
    with open(argv[3], "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(COLUMNS)
        for path in argv[1:3]:
            for r in rows(path):
                w.writerow(r)


if __name__ == "__main__":
    main(sys.argv)
