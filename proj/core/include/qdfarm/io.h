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

// Text formats. All tables are tab-separated with a header line; lines
// starting with '#' are comments. Missing values are written as "NA".

#ifndef QDFARM_IO_H
#define QDFARM_IO_H

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdfarm/layout.h"
#include "qdfarm/map.h"
#include "qdfarm/mux.h"
#include "qdfarm/pipeline.h"
#include "qdfarm/rfchain.h"
#include "qdfarm/sim.h"

namespace qdfarm {

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// CSM1 map files: '#'-prefixed key=value header lines followed by vds_count
// rows of vg_count space-separated values, from vds_min to vds_max.
void write_csm(std::ostream &out, const ChargeStabilityMap &map);
ChargeStabilityMap read_csm(std::istream &in);
void save_csm(const std::filesystem::path &path, const ChargeStabilityMap &map);
ChargeStabilityMap load_csm(const std::filesystem::path &path);

/// *.csm files in `dir`, sorted by name. Throws DataError if there are none.
std::vector<std::filesystem::path> list_csm_files(const std::filesystem::path &dir);

// Analysis records.
void write_results(std::ostream &out, const std::vector<DeviceResult> &results);
std::vector<DeviceResult> read_results(std::istream &in);

// Ground truth written by the simulator.
struct TruthRecord {
    std::string device_id;
    int set_id = 0;
    int row = 0;
    int col = 0;
    DeviceClass device_class = DeviceClass::Good;
    DotParameters params;
};

void write_truth(std::ostream &out, const std::vector<TruthRecord> &records);
std::vector<TruthRecord> read_truth(std::istream &in);
TruthRecord truth_record(const FarmDevice &device);

// Layout: row, col, set_id, device_id for all 1024 cells.
void write_layout(std::ostream &out, const FarmLayout &layout);
FarmLayout read_layout(std::istream &in);

// Scan plan: device_id, points, tau (s), averages, settle (s).
void write_scan_plan(std::ostream &out, const ScanPlan &plan);
ScanPlan read_scan_plan(std::istream &in);

/// Two whitespace-separated numeric columns, optional header and comments.
std::vector<SnrSample> read_two_columns(std::istream &in);
void write_two_columns(std::ostream &out, const std::string &x_name, const std::string &y_name,
                       const std::vector<SnrSample> &rows);

}  // namespace qdfarm

#endif  // QDFARM_IO_H
