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

#include "qdfarm/report.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "json.hpp"

namespace qdfarm {

namespace {

std::optional<Description> maybe_describe(const std::vector<double> &v) {
    if (v.empty()) return std::nullopt;
    return describe(v);
}

int class_index(DeviceClass c) { return static_cast<int>(c); }

nlohmann::json to_json(const std::optional<Description> &d) {
    if (!d) return nullptr;
    return {{"n", d->n},       {"mean", d->mean},     {"std", d->std}, {"min", d->min},
            {"q1", d->q1},     {"median", d->median}, {"q3", d->q3},   {"max", d->max}};
}

nlohmann::json to_json(const ClassCounts &c) {
    return {{"good", c[0]}, {"bad", c[1]}, {"multi", c[2]}};
}

nlohmann::json to_json(const SetAggregate &a) {
    nlohmann::json j = {{"devices", a.devices}, {"failures", a.failures}, {"classes", to_json(a.classes)},
                        {"v_1e", to_json(a.v_1e)}, {"alpha_g", to_json(a.alpha_g)},
                        {"asymmetry", to_json(a.asymmetry)}};
    if (a.set_id >= 0) j["set_id"] = a.set_id;
    return j;
}

nlohmann::json opt_json(const std::optional<double> &v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

SetAggregate aggregate(const std::vector<ReportRecord> &records, int set_id) {
    SetAggregate a;
    a.set_id = set_id;
    std::vector<double> v1e, alpha, asym;
    for (const auto &r : records) {
        if (set_id >= 0 && r.set_id != set_id) continue;
        ++a.devices;
        if (!r.result.ok()) {
            ++a.failures;
            continue;
        }
        ++a.classes[class_index(r.result.device_class)];
        if (r.result.device_class == DeviceClass::Good && r.result.params) {
            v1e.push_back(r.result.params->v_1e);
            alpha.push_back(r.result.params->alpha_g);
            asym.push_back(r.result.params->asymmetry);
        }
    }
    a.v_1e = maybe_describe(v1e);
    a.alpha_g = maybe_describe(alpha);
    a.asymmetry = maybe_describe(asym);
    return a;
}

std::vector<SetAggregate> aggregate_by_set(const std::vector<ReportRecord> &records) {
    std::set<int> ids;
    for (const auto &r : records) {
        if (r.set_id) ids.insert(*r.set_id);
    }
    std::vector<SetAggregate> out;
    for (int id : ids) out.push_back(aggregate(records, id));
    return out;
}

TruthComparison compare_with_truth(const std::vector<ReportRecord> &records) {
    TruthComparison c;
    std::vector<double> dv, da, dd;
    for (const auto &r : records) {
        if (!r.truth || !r.result.ok()) continue;
        ++c.compared;
        int t = class_index(r.truth->device_class);
        int p = class_index(r.result.device_class);
        ++c.confusion[t][p];
        if (t == p) ++c.agree;
        if (t == class_index(DeviceClass::Good) && p == t && r.result.params) {
            ++c.parameter_pairs;
            dv.push_back(r.result.params->v_1e - r.truth->params.v_1e);
            da.push_back(r.result.params->alpha_g - r.truth->params.alpha_g);
            dd.push_back(r.result.params->asymmetry - r.truth->params.asymmetry);
        }
    }
    c.v_1e_error = maybe_describe(dv);
    c.alpha_g_error = maybe_describe(da);
    c.asymmetry_error = maybe_describe(dd);
    return c;
}

FarmReport build_report(const std::vector<DeviceResult> &results, const std::vector<TruthRecord> &truth) {
    std::map<std::string, const TruthRecord *> by_id;
    for (const auto &t : truth) by_id[t.device_id] = &t;
    FarmReport report;
    for (const auto &r : results) {
        ReportRecord rec;
        rec.result = r;
        if (auto it = by_id.find(r.device_id); it != by_id.end()) {
            rec.truth = *it->second;
            rec.set_id = it->second->set_id;
        }
        report.records.push_back(std::move(rec));
    }
    std::stable_sort(report.records.begin(), report.records.end(),
                     [](const ReportRecord &a, const ReportRecord &b) { return a.result.device_id < b.result.device_id; });
    report.sets = aggregate_by_set(report.records);
    report.farm = aggregate(report.records);
    if (!truth.empty()) report.comparison = compare_with_truth(report.records);
    return report;
}

std::string check_consistency(const FarmReport &report) {
    auto sets = aggregate_by_set(report.records);
    if (sets.size() != report.sets.size()) return "set count differs from recomputation";
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (!(sets[i] == report.sets[i])) return "set " + std::to_string(sets[i].set_id) + " aggregate differs";
    }
    if (!(aggregate(report.records) == report.farm)) return "farm aggregate differs";
    int total = 0;
    for (int n : report.farm.classes) total += n;
    if (total + report.farm.failures != static_cast<int>(report.records.size())) {
        return "class counts do not add up to the record count";
    }
    return {};
}

void write_report_json(std::ostream &out, const FarmReport &report) {
    nlohmann::json j;
    j["devices"] = report.records.size();
    j["wall_seconds"] = report.wall_seconds;
    j["workers"] = report.workers;
    j["farm"] = to_json(report.farm);
    j["sets"] = nlohmann::json::array();
    for (const auto &s : report.sets) j["sets"].push_back(to_json(s));
    if (report.comparison) {
        const auto &c = *report.comparison;
        nlohmann::json confusion;
        for (DeviceClass t : {DeviceClass::Good, DeviceClass::Bad, DeviceClass::Multi}) {
            confusion[std::string(to_string(t))] = to_json(c.confusion[class_index(t)]);
        }
        j["truth_comparison"] = {{"compared", c.compared},
                                 {"agree", c.agree},
                                 {"agreement", c.agreement()},
                                 {"confusion", confusion},
                                 {"parameter_pairs", c.parameter_pairs},
                                 {"v_1e_error", to_json(c.v_1e_error)},
                                 {"alpha_g_error", to_json(c.alpha_g_error)},
                                 {"asymmetry_error", to_json(c.asymmetry_error)}};
    }
    j["records"] = nlohmann::json::array();
    for (const auto &rec : report.records) {
        const auto &r = rec.result;
        nlohmann::json jr = {{"device_id", r.device_id}, {"mode", std::string(to_string(r.mode))}};
        jr["set_id"] = rec.set_id ? nlohmann::json(*rec.set_id) : nlohmann::json(nullptr);
        if (!r.ok()) {
            jr["error"] = r.error;
            j["records"].push_back(jr);
            continue;
        }
        jr["class"] = std::string(to_string(r.device_class));
        if (r.params) {
            jr["params"] = {{"v_1e", r.params->v_1e},
                            {"alpha_g", r.params->alpha_g},
                            {"asymmetry", r.params->asymmetry},
                            {"v_2e", opt_json(r.params->v_2e)},
                            {"charging_energy_mev", opt_json(r.params->charging_energy)}};
            jr["score"] = r.score;
        }
        jr["snr"] = opt_json(r.snr);
        jr["segments"] = r.segment_count;
        jr["peaks"] = r.peak_count;
        jr["pairs"] = r.pair_count;
        jr["rejections"] = r.rejections;
        if (rec.truth) jr["truth_class"] = std::string(to_string(rec.truth->device_class));
        j["records"].push_back(jr);
    }
    out << j.dump(2) << '\n';
}

namespace {

std::string fmt(const char *spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string mean_std(const std::optional<Description> &d, double scale, const char *spec) {
    if (!d) return "NA";
    return fmt(spec, d->mean * scale) + " +- " + fmt(spec, d->std * scale);
}

void write_aggregate_row(std::ostream &out, const std::string &label, const SetAggregate &a) {
    out << label << '\t' << a.devices << '\t' << a.classes[0] << '\t' << a.classes[1] << '\t' << a.classes[2] << '\t'
        << a.failures << '\t' << mean_std(a.v_1e, 1e3, "%.1f") << '\t' << mean_std(a.alpha_g, 1.0, "%.3f") << '\t'
        << mean_std(a.asymmetry, 1.0, "%.3f") << '\n';
}

}  // namespace

void write_report_text(std::ostream &out, const FarmReport &report) {
    out << "# devices: " << report.records.size() << ", workers: " << report.workers
        << ", wall time: " << fmt("%.2f", report.wall_seconds) << " s\n";
    out << "set\tdevices\tgood\tbad\tmulti\tfailed\tv_1e_mV\talpha_g\tasymmetry\n";
    for (const auto &s : report.sets) write_aggregate_row(out, std::to_string(s.set_id), s);
    write_aggregate_row(out, "all", report.farm);

    const int n = report.farm.devices - report.farm.failures;
    if (n > 0) {
        out << "\nclass\tfrequency\n";
        for (DeviceClass c : {DeviceClass::Good, DeviceClass::Bad, DeviceClass::Multi}) {
            out << to_string(c) << '\t' << fmt("%.3f", static_cast<double>(report.farm.classes[class_index(c)]) / n)
                << '\n';
        }
    }
    if (report.comparison) {
        const auto &c = *report.comparison;
        out << "\n# truth comparison: " << c.agree << "/" << c.compared << " classes agree ("
            << fmt("%.1f", 100.0 * c.agreement()) << "%)\n";
        out << "truth\\predicted\tgood\tbad\tmulti\n";
        for (DeviceClass t : {DeviceClass::Good, DeviceClass::Bad, DeviceClass::Multi}) {
            const auto &row = c.confusion[class_index(t)];
            out << to_string(t) << '\t' << row[0] << '\t' << row[1] << '\t' << row[2] << '\n';
        }
        if (c.parameter_pairs > 0) {
            out << "\nparameter\tmean_error\tstd_error\n";
            out << "v_1e_mV\t" << fmt("%.2f", c.v_1e_error->mean * 1e3) << '\t' << fmt("%.2f", c.v_1e_error->std * 1e3)
                << '\n';
            out << "alpha_g\t" << fmt("%.4f", c.alpha_g_error->mean) << '\t' << fmt("%.4f", c.alpha_g_error->std)
                << '\n';
            out << "asymmetry\t" << fmt("%.4f", c.asymmetry_error->mean) << '\t'
                << fmt("%.4f", c.asymmetry_error->std) << '\n';
        }
    }
}

}  // namespace qdfarm
