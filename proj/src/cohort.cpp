#include "ga/cohort.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ga/io.hpp"
#include "ga/rng.hpp"

namespace ga::cohort {

std::string to_string(Country c) { return c == Country::US ? "US" : "Zambia"; }
std::string to_string(Device d) { return d == Device::GE ? "GE" : "Sonosite"; }

Country country_from_string(const std::string& s) {
    if (s == "US") return Country::US;
    if (s == "Zambia") return Country::Zambia;
    throw std::runtime_error("unknown country: " + s);
}

Device device_from_string(const std::string& s) {
    if (s == "GE") return Device::GE;
    if (s == "Sonosite") return Device::Sonosite;
    throw std::runtime_error("unknown device: " + s);
}

std::map<std::string, double> BiometryMeasurements::as_map() const {
    std::map<std::string, double> m;
    if (bpd) m["bpd"] = *bpd;
    if (hc) m["hc"] = *hc;
    if (ac) m["ac"] = *ac;
    if (fl) m["fl"] = *fl;
    if (crl) m["crl"] = *crl;
    return m;
}

std::size_t CohortManifest::visit_count() const {
    std::size_t n = 0;
    for (const auto& p : patients) n += p.visits.size();
    return n;
}

int ground_truth_ga(const Visit& visit) {
    if (visit.baseline_ga <= 0)
        throw std::invalid_argument("visit " + visit.visit_id + ": baseline_ga must be > 0");
    if (visit.days_since_baseline < 0)
        throw std::invalid_argument("visit " + visit.visit_id +
                                    ": negative days_since_baseline");
    return visit.baseline_ga + visit.days_since_baseline;
}

int trimester_of(int ga_days) {
    if (ga_days < kTrimester2StartDays) return 1;
    if (ga_days < kTrimester3StartDays) return 2;
    return 3;
}

namespace {

void validate_biometry(const BiometryMeasurements& b, const std::string& ctx, int ga_days) {
    for (const auto& [name, value] : b.as_map())
        if (!(value > 0.0))
            throw std::runtime_error(ctx + ": biometry " + name + " must be > 0");
    if (b.crl && ga_days >= kTrimester2StartDays)
        throw std::runtime_error(ctx + ": crl present outside first trimester");
}

}  // namespace

void validate(const CohortManifest& manifest) {
    std::set<std::string> ids;
    for (const auto& patient : manifest.patients) {
        if (patient.patient_id.empty())
            throw std::runtime_error("patient with empty patient_id");
        if (!ids.insert(patient.patient_id).second)
            throw std::runtime_error("duplicate patient_id: " + patient.patient_id);
        if (patient.device == Device::Sonosite && patient.country != Country::Zambia)
            throw std::runtime_error("patient " + patient.patient_id +
                                     ": Sonosite device outside Zambia");
        if (patient.visits.empty())
            throw std::runtime_error("patient " + patient.patient_id + " has no visits");

        int prev_days = -1;
        int zero_count = 0;
        for (const auto& visit : patient.visits) {
            const std::string ctx = "patient " + patient.patient_id + " visit " + visit.visit_id;
            const int ga = ground_truth_ga(visit);
            if (ga < kMinGaDays || ga > kMaxGaDays)
                throw std::runtime_error(ctx + ": ground-truth GA " + std::to_string(ga) +
                                         " outside [" + std::to_string(kMinGaDays) + ", " +
                                         std::to_string(kMaxGaDays) + "]");
            if (visit.days_since_baseline <= prev_days)
                throw std::runtime_error(ctx + ": visits not strictly ordered by days_since_baseline");
            prev_days = visit.days_since_baseline;
            if (visit.days_since_baseline == 0) ++zero_count;
            validate_biometry(visit.biometry, ctx, ga);
        }
        if (zero_count != 1)
            throw std::runtime_error("patient " + patient.patient_id +
                                     ": expected exactly one baseline visit, found " +
                                     std::to_string(zero_count));
    }
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::tune: return "tune";
        default: return "test";
    }
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "tune") return Split::tune;
    if (s == "test") return Split::test;
    throw std::runtime_error("unknown split: " + s);
}

std::array<std::size_t, 3> SplitAssignment::counts() const {
    std::array<std::size_t, 3> c{0, 0, 0};
    for (const auto& [id, split] : by_patient) c[static_cast<int>(split)]++;
    return c;
}

SplitAssignment split_patients(const CohortManifest& cohort,
                               std::array<double, 3> ratios, std::uint64_t seed) {
    if (cohort.patients.empty())
        throw std::invalid_argument("split_patients: empty cohort");
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split ratios must sum to 1");

    std::vector<std::string> ids;
    ids.reserve(cohort.patients.size());
    for (const auto& p : cohort.patients) ids.push_back(p.patient_id);
    rng::Rng gen = rng::Rng(seed).fork("split_patients");
    gen.shuffle(ids);

    const auto n = static_cast<double>(ids.size());
    auto boundary = [n](double cum) {
        const double x = n * cum;
        const double snapped = std::llround(x);
        if (std::abs(x - snapped) < 1e-9) return static_cast<std::size_t>(snapped);
        return static_cast<std::size_t>(std::ceil(x));
    };
    const std::size_t b_train = boundary(ratios[0]);
    const std::size_t b_tune = boundary(ratios[0] + ratios[1]);

    SplitAssignment out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        Split s = Split::test;
        if (i < b_train)
            s = Split::train;
        else if (i < b_tune)
            s = Split::tune;
        out.by_patient.emplace(ids[i], s);
    }
    return out;
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path,
                std::uint64_t seed) {
    std::ostringstream out;
    out << io::header_line("split", seed, {}) << "\n";
    out << "patient_id,split\n";
    for (const auto& [id, s] : split.by_patient)
        out << id << "," << to_string(s) << "\n";
    io::write_text_file(path, out.str());
}

SplitAssignment load_split(const std::filesystem::path& path) {
    SplitAssignment split;
    bool saw_header = false;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {  // column header
            saw_header = true;
            continue;
        }
        const auto cells = io::csv_split(line);
        if (cells.size() != 2)
            throw std::runtime_error("bad split row in " + path.string() + ": " + line);
        split.by_patient.emplace(cells[0], split_from_string(cells[1]));
    }
    return split;
}

namespace {

using nlohmann::ordered_json;

ordered_json biometry_to_json(const BiometryMeasurements& b) {
    ordered_json j = ordered_json::object();
    if (b.bpd) j["bpd"] = *b.bpd;
    if (b.hc) j["hc"] = *b.hc;
    if (b.ac) j["ac"] = *b.ac;
    if (b.fl) j["fl"] = *b.fl;
    if (b.crl) j["crl"] = *b.crl;
    return j;
}

BiometryMeasurements biometry_from_json(const nlohmann::json& j) {
    BiometryMeasurements b;
    if (j.contains("bpd")) b.bpd = j.at("bpd").get<double>();
    if (j.contains("hc")) b.hc = j.at("hc").get<double>();
    if (j.contains("ac")) b.ac = j.at("ac").get<double>();
    if (j.contains("fl")) b.fl = j.at("fl").get<double>();
    if (j.contains("crl")) b.crl = j.at("crl").get<double>();
    return b;
}

ordered_json patient_to_json(const Patient& p) {
    ordered_json j;
    j["patient_id"] = p.patient_id;
    j["country"] = to_string(p.country);
    j["device"] = to_string(p.device);
    auto& visits = j["visits"] = ordered_json::array();
    for (const auto& v : p.visits) {
        ordered_json jv;
        jv["visit_id"] = v.visit_id;
        jv["days_since_baseline"] = v.days_since_baseline;
        jv["baseline_ga"] = v.baseline_ga;
        jv["biometry"] = biometry_to_json(v.biometry);
        auto& media = jv["media"] = ordered_json::array();
        for (const auto& m : v.media) {
            ordered_json jm;
            jm["kind"] = imaging::to_string(m.kind);
            jm["path"] = m.path;
            media.push_back(std::move(jm));
        }
        if (!v.formula_ga_estimates.empty()) {
            ordered_json je = ordered_json::object();
            for (const auto& [name, days] : v.formula_ga_estimates) je[name] = days;
            jv["formula_ga_estimates"] = std::move(je);
        }
        visits.push_back(std::move(jv));
    }
    return j;
}

Patient patient_from_json(const nlohmann::json& j) {
    Patient p;
    p.patient_id = j.at("patient_id").get<std::string>();
    p.country = country_from_string(j.at("country").get<std::string>());
    p.device = device_from_string(j.at("device").get<std::string>());
    for (const auto& jv : j.at("visits")) {
        Visit v;
        v.visit_id = jv.at("visit_id").get<std::string>();
        v.days_since_baseline = jv.at("days_since_baseline").get<int>();
        v.baseline_ga = jv.at("baseline_ga").get<int>();
        v.biometry = biometry_from_json(jv.at("biometry"));
        for (const auto& jm : jv.at("media")) {
            MediaRef m;
            m.kind = imaging::media_kind_from_string(jm.at("kind").get<std::string>());
            m.path = jm.at("path").get<std::string>();
            v.media.push_back(std::move(m));
        }
        if (jv.contains("formula_ga_estimates"))
            for (const auto& [name, days] : jv.at("formula_ga_estimates").items())
                v.formula_ga_estimates.emplace(name, days.get<double>());
        p.visits.push_back(std::move(v));
    }
    return p;
}

}  // namespace

void save_manifest(const CohortManifest& cohort, const std::filesystem::path& path,
                   const std::string& header) {
    std::ostringstream out;
    if (!header.empty()) out << header << "\n";
    for (const auto& p : cohort.patients) out << patient_to_json(p).dump() << "\n";
    io::write_text_file(path, out.str());
}

CohortManifest load_manifest(const std::filesystem::path& path) {
    CohortManifest cohort;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            cohort.patients.push_back(patient_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("manifest parse error at line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
    }
    validate(cohort);
    return cohort;
}

std::string to_string(SizeClass c) {
    switch (c) {
        case SizeClass::normal: return "normal";
        case SizeClass::sga: return "sga";
        default: return "lga";
    }
}

std::vector<PatientLatent> load_latents(const std::filesystem::path& path) {
    std::vector<PatientLatent> out;
    bool saw_header = false;
    for (const auto& line : io::read_lines(path)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            saw_header = true;
            continue;
        }
        const auto cells = io::csv_split(line);
        if (cells.size() != 3)
            throw std::runtime_error("bad latents row: " + line);
        PatientLatent lat;
        lat.patient_id = cells[0];
        if (cells[1] == "normal")
            lat.size_class = SizeClass::normal;
        else if (cells[1] == "sga")
            lat.size_class = SizeClass::sga;
        else if (cells[1] == "lga")
            lat.size_class = SizeClass::lga;
        else
            throw std::runtime_error("bad size class: " + cells[1]);
        lat.size_factor = std::stod(cells[2]);
        out.push_back(std::move(lat));
    }
    return out;
}

}  // namespace ga::cohort
