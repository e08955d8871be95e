// Copyright 2026 The qdfarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QDFARM_REPORT_H
#define QDFARM_REPORT_H

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdfarm/io.h"
#include "qdfarm/pipeline.h"
#include "qdfarm/stats.h"

namespace qdfarm {

struct ReportRecord {
    DeviceResult result;
    std::optional<int> set_id;         ///< From truth or layout, when known.
    std::optional<TruthRecord> truth;  ///< When ground truth is available.
};

/// Class counts indexed by DeviceClass (good, bad, multi).
using ClassCounts = std::array<int, 3>;

struct SetAggregate {
    int set_id = -1;  ///< -1 for the whole farm.
    int devices = 0;
    int failures = 0;
    ClassCounts classes{};
    std::optional<Description> v_1e;  ///< Over Good devices with parameters.
    std::optional<Description> alpha_g;
    std::optional<Description> asymmetry;

    bool operator==(const SetAggregate &) const = default;
};

struct TruthComparison {
    int compared = 0;  ///< Devices with truth and a successful analysis.
    int agree = 0;
    std::array<ClassCounts, 3> confusion{};  ///< [truth][predicted]
    int parameter_pairs = 0;                 ///< True and predicted Good.
    std::optional<Description> v_1e_error;   ///< predicted - truth, V
    std::optional<Description> alpha_g_error;
    std::optional<Description> asymmetry_error;

    double agreement() const { return compared ? static_cast<double>(agree) / compared : 0.0; }
};

struct FarmReport {
    std::vector<ReportRecord> records;  ///< Sorted by device_id.
    std::vector<SetAggregate> sets;     ///< Per set, ascending set id.
    SetAggregate farm;
    std::optional<TruthComparison> comparison;
    double wall_seconds = 0.0;
    unsigned workers = 0;
};

std::vector<SetAggregate> aggregate_by_set(const std::vector<ReportRecord> &records);
SetAggregate aggregate(const std::vector<ReportRecord> &records, int set_id = -1);
TruthComparison compare_with_truth(const std::vector<ReportRecord> &records);

/// Joins results with optional ground truth (matched by device_id) and
/// computes all aggregates.
FarmReport build_report(const std::vector<DeviceResult> &results, const std::vector<TruthRecord> &truth = {});

/// Recomputes the aggregates from the records and returns a description of
/// the first mismatch, or an empty string when consistent.
std::string check_consistency(const FarmReport &report);

/// Full report as JSON.
void write_report_json(std::ostream &out, const FarmReport &report);

/// Human-readable tables: per-set aggregates, class frequencies and the truth
/// comparison when present.
void write_report_text(std::ostream &out, const FarmReport &report);

}  // namespace qdfarm

#endif  // QDFARM_REPORT_H
