#!/usr/bin/env python3
# Copyright 2026 The fogdx Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert the Orange3 copy of the Cleveland heart-disease table to numeric CSV.

Categorical codes follow the widely used Kaggle "heart.csv" numbering so the
rows line up with published sample tables. The label keeps its original
meaning (1 = >50% diameter narrowing). Rows with missing values are dropped.

usage: convert_cleveland.py heart_disease.tab > data/cleveland.csv
"""

import sys

CP = {"asymptomatic": 0, "atypical ang": 1, "non-anginal": 2, "typical ang": 3}
SEX = {"female": 0, "male": 1}
RESTECG = {"left vent hypertrophy": 0, "normal": 1, "ST-T abnormal": 2}
SLOPE = {"downsloping": 0, "flat": 1, "upsloping": 2}
THAL = {"fixed defect": 1, "normal": 2, "reversable defect": 3}

HEADER = "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,target"


def num(s):
    v = float(s)
    return str(int(v)) if v.is_integer() else s


def main(path):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()[3:]
    print(HEADER)
    for line in lines:
        c = line.split("\t")
        if "?" in c or "" in c:
            continue
        row = [num(c[0]), SEX[c[1]], CP[c[2]], num(c[3]), num(c[4]), num(c[5]),
               RESTECG[c[6]], num(c[7]), num(c[8]), num(c[9]), SLOPE[c[10]],
               num(c[11]), THAL[c[12]], num(c[13])]
        print(",".join(str(x) for x in row))


if __name__ == "__main__":
    main(sys.argv[1])
