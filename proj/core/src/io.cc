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

#include "qdfarm/io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace qdfarm {

namespace {

constexpr std::string_view kNa = "NA";

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_ws(const std::string &line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
}

void strip_cr(std::string &line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool skippable(const std::string &line) {
    return line.empty() || line.front() == '#' || line.find_first_not_of(" \t") == std::string::npos;
}

int parse_int(std::string_view text) {
    int v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) {
        throw DataError("invalid integer '" + std::string(text) + "'");
    }
    return v;
}

std::int64_t parse_int64(std::string_view text) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) {
        throw DataError("invalid integer '" + std::string(text) + "'");
    }
    return v;
}

std::string opt(const std::optional<double> &v) { return v ? format_double(*v) : std::string(kNa); }

std::optional<double> parse_opt(std::string_view text) {
    if (text == kNa) return std::nullopt;
    return parse_double(text);
}

// Reads a tab-separated table whose header must equal `columns`.
template <typename F>
void read_table(std::istream &in, const std::vector<std::string> &columns, F row_fn) {
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (skippable(line)) continue;
        auto fields = split(line, '\t');
        if (!header) {
            if (fields != columns) {
                throw DataError("unexpected table header on line " + std::to_string(lineno));
            }
            header = true;
            continue;
        }
        if (fields.size() != columns.size()) {
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(columns.size()) +
                            " columns, got " + std::to_string(fields.size()));
        }
        try {
            row_fn(fields);
        } catch (const DataError &) {
            throw;
        } catch (const std::exception &e) {
            throw DataError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!header) {
        throw DataError("table has no header");
    }
}

void write_row(std::ostream &out, const std::vector<std::string> &fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << '\t';
        out << fields[i];
    }
    out << '\n';
}

std::string_view units_of(MapMode mode) {
    switch (mode) {
        case MapMode::Rf:
            return "arb";
        case MapMode::DcCurrent:
            return "A";
        case MapMode::DcDerivative:
            return "A/V";
    }
    return "arb";
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return {buf, p};
}

double parse_double(std::string_view text) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
        throw DataError("invalid number '" + std::string(text) + "'");
    }
    return v;
}

// ---------------------------------------------------------------------------
// CSM1

void write_csm(std::ostream &out, const ChargeStabilityMap &map) {
    out << "# format=CSM1\n";
    out << "# device_id=" << map.device_id() << '\n';
    out << "# mode=" << to_string(map.mode()) << '\n';
    out << "# vg_min=" << format_double(map.vg().min) << '\n';
    out << "# vg_max=" << format_double(map.vg().max) << '\n';
    out << "# vg_count=" << map.vg().count << '\n';
    out << "# vds_min=" << format_double(map.vds().min) << '\n';
    out << "# vds_max=" << format_double(map.vds().max) << '\n';
    out << "# vds_count=" << map.vds().count << '\n';
    out << "# units=" << units_of(map.mode()) << '\n';
    for (std::size_t r = 0; r < map.rows(); ++r) {
        auto row = map.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ' ';
            out << format_double(row[c]);
        }
        out << '\n';
    }
}

ChargeStabilityMap read_csm(std::istream &in) {
    std::map<std::string, std::string> header;
    std::vector<double> values;
    std::string line;
    std::size_t data_rows = 0;
    std::size_t cols = 0;
    bool in_data = false;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (!line.empty() && line.front() == '#') {
            if (in_data) throw DataError("CSM header line after data");
            std::string body = line.substr(1);
            body.erase(0, body.find_first_not_of(' '));
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            header[body.substr(0, eq)] = body.substr(eq + 1);
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        in_data = true;
        if (cols == 0) {
            auto it = header.find("vg_count");
            if (it == header.end()) throw DataError("CSM file lacks vg_count");
            cols = static_cast<std::size_t>(parse_int(it->second));
        }
        auto fields = split_ws(line);
        if (fields.size() != cols) {
            throw DataError("CSM row " + std::to_string(data_rows + 1) + " has " + std::to_string(fields.size()) +
                            " values, expected " + std::to_string(cols));
        }
        for (const auto &f : fields) values.push_back(parse_double(f));
        ++data_rows;
    }
    auto get = [&](const std::string &key) -> const std::string & {
        auto it = header.find(key);
        if (it == header.end()) throw DataError("CSM file lacks " + key);
        return it->second;
    };
    if (get("format") != "CSM1") throw DataError("unsupported map format '" + get("format") + "'");
    try {
        Axis vg{parse_double(get("vg_min")), parse_double(get("vg_max")),
                static_cast<std::size_t>(parse_int(get("vg_count")))};
        Axis vds{parse_double(get("vds_min")), parse_double(get("vds_max")),
                 static_cast<std::size_t>(parse_int(get("vds_count")))};
        if (data_rows != vds.count) {
            throw DataError("CSM file has " + std::to_string(data_rows) + " rows, expected " +
                            std::to_string(vds.count));
        }
        return ChargeStabilityMap(get("device_id"), parse_map_mode(get("mode")), vg, vds, std::move(values));
    } catch (const DataError &) {
        throw;
    } catch (const std::exception &e) {
        throw DataError(e.what());
    }
}

void save_csm(const std::filesystem::path &path, const ChargeStabilityMap &map) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_csm(out, map);
    if (!out) throw DataError("write failed for " + path.string());
}

ChargeStabilityMap load_csm(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        return read_csm(in);
    } catch (const DataError &e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<std::filesystem::path> list_csm_files(const std::filesystem::path &dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto &entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csm") files.push_back(entry.path());
    }
    if (files.empty()) throw DataError("no .csm files in " + dir.string());
    std::sort(files.begin(), files.end());
    return files;
}

// ---------------------------------------------------------------------------
// Records

namespace {

const std::vector<std::string> kResultColumns = {
    "device_id", "mode", "class", "v_1e", "alpha_g", "asymmetry", "v_2e", "charging_energy_mev", "score",
    "snr", "segments", "peaks", "pairs", "rejections", "error"};

const std::vector<std::string> kTruthColumns = {"device_id", "set_id", "row", "col", "class",
                                                "v_1e", "alpha_g", "asymmetry", "v_2e", "charging_energy_mev"};

std::string join(const std::vector<std::string> &items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

// Keeps free text inside one tab-separated field.
std::string sanitize(std::string text) {
    for (char &ch : text) {
        if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    }
    return text.empty() ? std::string(kNa) : text;
}

}  // namespace

void write_results(std::ostream &out, const std::vector<DeviceResult> &results) {
    write_row(out, kResultColumns);
    for (const auto &r : results) {
        const auto &p = r.params;
        write_row(out, {r.device_id, std::string(to_string(r.mode)),
                        r.ok() ? std::string(to_string(r.device_class)) : std::string(kNa),
                        p ? format_double(p->v_1e) : std::string(kNa),
                        p ? format_double(p->alpha_g) : std::string(kNa),
                        p ? format_double(p->asymmetry) : std::string(kNa), p ? opt(p->v_2e) : std::string(kNa),
                        p ? opt(p->charging_energy) : std::string(kNa),
                        p ? format_double(r.score) : std::string(kNa), opt(r.snr),
                        std::to_string(r.segment_count), std::to_string(r.peak_count),
                        std::to_string(r.pair_count), sanitize(join(r.rejections, ';')), sanitize(r.error)});
    }
}

std::vector<DeviceResult> read_results(std::istream &in) {
    std::vector<DeviceResult> out;
    read_table(in, kResultColumns, [&](const std::vector<std::string> &f) {
        DeviceResult r;
        r.device_id = f[0];
        r.mode = parse_map_mode(f[1]);
        if (f[14] != kNa) r.error = f[14];
        if (f[2] != kNa) r.device_class = parse_device_class(f[2]);
        if (f[3] != kNa) {
            DotParameters p;
            p.v_1e = parse_double(f[3]);
            p.alpha_g = parse_double(f[4]);
            p.asymmetry = parse_double(f[5]);
            p.v_2e = parse_opt(f[6]);
            p.charging_energy = parse_opt(f[7]);
            r.params = p;
            r.score = parse_double(f[8]);
        }
        r.snr = parse_opt(f[9]);
        r.segment_count = static_cast<std::size_t>(parse_int(f[10]));
        r.peak_count = static_cast<std::size_t>(parse_int(f[11]));
        r.pair_count = static_cast<std::size_t>(parse_int(f[12]));
        if (f[13] != kNa) r.rejections = split(f[13], ';');
        out.push_back(std::move(r));
    });
    return out;
}

void write_truth(std::ostream &out, const std::vector<TruthRecord> &records) {
    write_row(out, kTruthColumns);
    for (const auto &t : records) {
        write_row(out, {t.device_id, std::to_string(t.set_id), std::to_string(t.row), std::to_string(t.col),
                        std::string(to_string(t.device_class)), format_double(t.params.v_1e),
                        format_double(t.params.alpha_g), format_double(t.params.asymmetry), opt(t.params.v_2e),
                        opt(t.params.charging_energy)});
    }
}

std::vector<TruthRecord> read_truth(std::istream &in) {
    std::vector<TruthRecord> out;
    read_table(in, kTruthColumns, [&](const std::vector<std::string> &f) {
        TruthRecord t;
        t.device_id = f[0];
        t.set_id = parse_int(f[1]);
        t.row = parse_int(f[2]);
        t.col = parse_int(f[3]);
        t.device_class = parse_device_class(f[4]);
        t.params.v_1e = parse_double(f[5]);
        t.params.alpha_g = parse_double(f[6]);
        t.params.asymmetry = parse_double(f[7]);
        t.params.v_2e = parse_opt(f[8]);
        t.params.charging_energy = parse_opt(f[9]);
        out.push_back(std::move(t));
    });
    return out;
}

TruthRecord truth_record(const FarmDevice &device) {
    return {device.device_id, device.set_id, device.position.row, device.position.col, device.truth_class,
            device.truth};
}

void write_layout(std::ostream &out, const FarmLayout &layout) {
    write_row(out, {"row", "col", "set_id", "device_id"});
    for (int r = 0; r < kFarmSide; ++r) {
        for (int c = 0; c < kFarmSide; ++c) {
            const auto &cell = layout.at(r, c);
            write_row(out, {std::to_string(r), std::to_string(c), std::to_string(cell.set_id),
                            device_name(cell.device_index)});
        }
    }
}

FarmLayout read_layout(std::istream &in) {
    std::vector<LayoutCell> cells(kFarmCells);
    std::vector<bool> seen(kFarmCells, false);
    std::map<int, int> sizes;
    read_table(in, {"row", "col", "set_id", "device_id"}, [&](const std::vector<std::string> &f) {
        int r = parse_int(f[0]);
        int c = parse_int(f[1]);
        if (r < 0 || r >= kFarmSide || c < 0 || c >= kFarmSide) throw DataError("cell out of range");
        int i = r * kFarmSide + c;
        if (seen[i]) throw DataError("cell (" + f[0] + ", " + f[1] + ") listed twice");
        seen[i] = true;
        cells[i] = {parse_int(f[2]), parse_device_name(f[3])};
        ++sizes[cells[i].set_id];
    });
    std::vector<int> set_sizes;
    for (const auto &[id, n] : sizes) {
        if (id != static_cast<int>(set_sizes.size())) throw DataError("set ids must be 0..k-1");
        set_sizes.push_back(n);
    }
    try {
        return FarmLayout(std::move(cells), std::move(set_sizes));
    } catch (const std::invalid_argument &e) {
        throw DataError(e.what());
    }
}

void write_scan_plan(std::ostream &out, const ScanPlan &plan) {
    write_row(out, {"device_id", "points", "tau_s", "averages", "settle_s"});
    for (const auto &e : plan) {
        write_row(out, {e.device_id, std::to_string(e.points), format_seconds(e.tau_ps), std::to_string(e.averages),
                        format_seconds(e.settle_ps)});
    }
}

ScanPlan read_scan_plan(std::istream &in) {
    ScanPlan plan;
    read_table(in, {"device_id", "points", "tau_s", "averages", "settle_s"}, [&](const std::vector<std::string> &f) {
        plan.push_back({f[0], parse_int64(f[1]), parse_seconds_ps(f[2]), parse_int64(f[3]), parse_seconds_ps(f[4])});
    });
    return plan;
}

std::vector<SnrSample> read_two_columns(std::istream &in) {
    std::vector<SnrSample> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (skippable(line)) continue;
        auto fields = split_ws(line);
        if (fields.size() != 2) {
            throw DataError("line " + std::to_string(lineno) + ": expected two columns");
        }
        double x = 0.0, y = 0.0;
        try {
            x = parse_double(fields[0]);
            y = parse_double(fields[1]);
        } catch (const DataError &) {
            if (first) {  // header line
                first = false;
                continue;
            }
            throw DataError("line " + std::to_string(lineno) + ": non-numeric value");
        }
        first = false;
        rows.push_back({x, y});
    }
    if (rows.empty()) throw DataError("table has no data rows");
    return rows;
}

void write_two_columns(std::ostream &out, const std::string &x_name, const std::string &y_name,
                       const std::vector<SnrSample> &rows) {
    out << x_name << '\t' << y_name << '\n';
    for (const auto &r : rows) out << format_double(r.x) << '\t' << format_double(r.y) << '\n';
}

}  // namespace qdfarm
