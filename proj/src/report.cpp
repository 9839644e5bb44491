#include "ga/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ga::report {

namespace {

using evalstats::EvalVisit;
using evalstats::StatsConfig;
using evalstats::SubgroupCriterion;

struct Resolver {
    const ReportInputs* in;

    // Estimated GA for (visit, method), if present.
    const double* lookup(const std::string& visit_id, const std::string& method) const {
        if (const auto vit = in->predictions.find(visit_id); vit != in->predictions.end())
            if (const auto mit = vit->second.find(method); mit != vit->second.end())
                return &mit->second;
        if (const auto vit = in->baselines.find(visit_id); vit != in->baselines.end())
            if (const auto mit = vit->second.find(method); mit != vit->second.end())
                return &mit->second;
        return nullptr;
    }

    bool has_all(const std::string& visit_id, const std::vector<std::string>& methods) const {
        for (const auto& m : methods)
            if (!lookup(visit_id, m)) return false;
        return true;
    }
};

std::vector<EvalVisit> collect_visits(const ReportInputs& in) {
    std::vector<EvalVisit> out;
    for (const auto& patient : in.cohort->patients) {
        if (!in.eval_patients.empty() && !in.eval_patients.count(patient.patient_id))
            continue;
        for (const auto& visit : patient.visits) {
            EvalVisit v;
            v.patient = &patient;
            v.visit = &visit;
            v.gt_ga = cohort::ground_truth_ga(visit);
            v.verdict = growth::SizeVerdict::unclassifiable;
            if (in.percentiles && visit.biometry.ac)
                v.verdict = growth::classify_size(*visit.biometry.ac, v.gt_ga,
                                                  patient.country, *in.percentiles);
            out.push_back(v);
        }
    }
    return out;
}

// One-visit-per-patient sampling, redone independently for every analysis
// group (the group label perturbs the per-patient stream).
std::vector<EvalVisit> select_group(const std::vector<EvalVisit>& pool,
                                    const Resolver& resolver,
                                    const std::vector<std::string>& methods,
                                    const SubgroupCriterion& criterion,
                                    const std::string& group_label,
                                    const StatsConfig& stats) {
    const std::uint64_t seed = stats.seed ^ rng::hash_label("group:" + group_label);
    return evalstats::select_one_visit_per_patient(
        pool,
        [&](const EvalVisit& v) {
            return criterion.matches(v) && resolver.has_all(v.visit->visit_id, methods);
        },
        seed);
}

GroupBlock make_block(const std::string& name, const std::vector<EvalVisit>& selected,
                      const Resolver& resolver, const std::vector<std::string>& methods,
                      const std::string& reference, bool diff_is_method_minus_ref,
                      const StatsConfig& stats) {
    GroupBlock block;
    block.name = name;
    block.n_patients = selected.size();
    if (selected.empty()) return block;

    std::vector<double> gts;
    gts.reserve(selected.size());
    for (const auto& v : selected) gts.push_back(static_cast<double>(v.gt_ga));
    const auto gt_stats = evalstats::mae_me(gts);
    block.mean_gt = gt_stats.me;
    block.sd_gt = gt_stats.sd;

    std::map<std::string, std::vector<double>> abs_errors;
    for (const auto& method : methods) {
        std::vector<double> errors;
        errors.reserve(selected.size());
        for (const auto& v : selected) {
            const double* est = resolver.lookup(v.visit->visit_id, method);
            errors.push_back(*est - static_cast<double>(v.gt_ga));
        }
        MethodRow row;
        row.method = method;
        row.err = evalstats::mae_me(errors);
        row.is_reference = method == reference;
        block.rows.push_back(row);

        auto& abs_e = abs_errors[method];
        abs_e.reserve(errors.size());
        for (double e : errors) abs_e.push_back(std::abs(e));
    }
    if (selected.size() >= 2) {
        for (auto& row : block.rows) {
            if (row.is_reference) continue;
            const auto& m = abs_errors[row.method];
            const auto& r = abs_errors[reference];
            row.diff = diff_is_method_minus_ref ? evalstats::paired_diff_ci(m, r, stats)
                                                : evalstats::paired_diff_ci(r, m, stats);
            row.has_diff = true;
        }
    }
    return block;
}

std::string fmt_pm(double value, double sd) {
    return io::fmt_f(value, 2) + " +/- " + io::fmt_f(sd, 2);
}

void render_table_text(const TableDoc& table, std::ostream& out) {
    out << table.title << "\n";
    for (const auto& block : table.groups) {
        out << "\n== " << block.name << " | No. patients: " << block.n_patients;
        if (block.n_patients > 0)
            out << " | Average gold standard GA +/- sd (days): "
                << fmt_pm(block.mean_gt, block.sd_gt);
        out << "\n";
        if (block.rows.empty()) continue;
        auto cell = [](const std::string& s) {
            std::string c = s;
            c.resize(std::max<std::size_t>(c.size(), 22), ' ');
            return c;
        };
        out << cell("Estimation Method");
        for (const auto& row : block.rows) out << cell(row.method);
        out << "\n" << cell("ME +/- sd (days)");
        for (const auto& row : block.rows) out << cell(fmt_pm(row.err.me, row.err.sd));
        out << "\n" << cell("MAE +/- sd (days)");
        for (const auto& row : block.rows) out << cell(fmt_pm(row.err.mae, row.err.sd_abs));
        out << "\n" << cell("MAE diff +/- sd (days)");
        for (const auto& row : block.rows)
            out << cell(row.is_reference
                            ? "Reference"
                            : (row.has_diff ? fmt_pm(row.diff.mean, row.diff.sd) : "n/a"));
        out << "\n" << cell("95% CI of diff (days)");
        for (const auto& row : block.rows)
            out << cell(row.is_reference ? "Reference"
                                         : (row.has_diff ? io::fmt_f(row.diff.lo, 1) + ", " +
                                                               io::fmt_f(row.diff.hi, 1)
                                                         : "n/a"));
        out << "\n";
    }
}

void render_table_csv(const TableDoc& table, std::ostream& out) {
    out << "group,n,mean_gt,sd_gt,method,reference,me,me_sd,mae,mae_sd,"
           "diff_mean,diff_sd,ci_lo,ci_hi\n";
    for (const auto& block : table.groups) {
        for (const auto& row : block.rows) {
            out << block.name << "," << block.n_patients << ","
                << io::fmt_g(block.mean_gt, 10) << "," << io::fmt_g(block.sd_gt, 10) << ","
                << row.method << "," << (row.is_reference ? 1 : 0) << ","
                << io::fmt_g(row.err.me, 10) << "," << io::fmt_g(row.err.sd, 10) << ","
                << io::fmt_g(row.err.mae, 10) << "," << io::fmt_g(row.err.sd_abs, 10);
            if (row.has_diff)
                out << "," << io::fmt_g(row.diff.mean, 10) << ","
                    << io::fmt_g(row.diff.sd, 10) << "," << io::fmt_g(row.diff.lo, 10)
                    << "," << io::fmt_g(row.diff.hi, 10);
            else
                out << ",,,,";
            out << "\n";
        }
    }
}

}  // namespace

ReportSuite build_report(const ReportInputs& inputs) {
    if (!inputs.cohort) throw std::invalid_argument("build_report: missing cohort");
    Resolver resolver{&inputs};
    const auto pool = collect_visits(inputs);
    const auto& stats = inputs.stats;

    std::vector<std::string> main_methods;
    main_methods.push_back(inputs.baseline_name);
    for (const auto& m : inputs.model_methods) main_methods.push_back(m);

    ReportSuite suite;

    {
        TableDoc t;
        t.id = "table1_overall";
        t.title = "Table 1: GA estimation overall performance";
        t.reference_method = inputs.baseline_name;
        const auto selected = select_group(pool, resolver, main_methods,
                                           SubgroupCriterion::all(), "overall", stats);
        t.groups.push_back(make_block("Overall", selected, resolver, main_methods,
                                      inputs.baseline_name, true, stats));
        // Paired errors for the scatter/binned outputs reuse this selection.
        for (const auto& v : selected) {
            evalstats::PairedErrorRow row;
            row.patient_id = v.patient->patient_id;
            row.gt_ga = static_cast<double>(v.gt_ga);
            for (const auto& m : main_methods)
                row.errors[m] = *resolver.lookup(v.visit->visit_id, m) - row.gt_ga;
            suite.overall_rows.push_back(std::move(row));
        }
        suite.tables.push_back(std::move(t));
    }

    {
        TableDoc t;
        t.id = "table2_trimester";
        t.title = "Table 2: subgroup analysis split by trimester";
        t.reference_method = inputs.baseline_name;
        const char* names[3] = {"First Trimester", "Second Trimester", "Third Trimester"};
        for (int tri = 1; tri <= 3; ++tri) {
            const auto selected =
                select_group(pool, resolver, main_methods,
                             SubgroupCriterion::for_trimester(tri),
                             "trimester" + std::to_string(tri), stats);
            t.groups.push_back(make_block(names[tri - 1], selected, resolver, main_methods,
                                          inputs.baseline_name, true, stats));
        }
        suite.tables.push_back(std::move(t));
    }

    {
        TableDoc t;
        t.id = "table3_country_device";
        t.title = "Table 3: subgroup analysis split by country and device";
        t.reference_method = inputs.baseline_name;
        struct GroupDef {
            const char* name;
            cohort::Country country;
            cohort::Device device;
        };
        const GroupDef defs[] = {
            {"US - GE", cohort::Country::US, cohort::Device::GE},
            {"Zambia - GE", cohort::Country::Zambia, cohort::Device::GE},
            {"Zambia - Sonosite", cohort::Country::Zambia, cohort::Device::Sonosite},
        };
        for (const auto& def : defs) {
            SubgroupCriterion c;  // country + device combined
            c.kind = SubgroupCriterion::Kind::all;
            const auto selected = evalstats::select_one_visit_per_patient(
                pool,
                [&](const EvalVisit& v) {
                    return v.patient->country == def.country &&
                           v.patient->device == def.device &&
                           resolver.has_all(v.visit->visit_id, main_methods);
                },
                stats.seed ^ rng::hash_label(std::string("group:") + def.name));
            t.groups.push_back(make_block(def.name, selected, resolver, main_methods,
                                          inputs.baseline_name, true, stats));
        }
        suite.tables.push_back(std::move(t));
    }

    if (!inputs.formula_methods.empty()) {
        TableDoc t;
        t.id = "table4_formulae";
        t.title = "Table 4: comparison against alternative biometry regression formulae "
                  "(second + third trimester)";
        t.reference_method = inputs.ensemble_name;
        t.diff_is_method_minus_ref = false;
        std::vector<std::string> methods = inputs.formula_methods;
        methods.push_back(inputs.ensemble_name);
        const auto selected = select_group(
            pool, resolver, methods,
            SubgroupCriterion::for_ga_range(cohort::kTrimester2StartDays, 1 << 20),
            "formulae", stats);
        t.groups.push_back(make_block("Overall (Second+Third Trimester)", selected,
                                      resolver, methods, inputs.ensemble_name, false,
                                      stats));
        suite.tables.push_back(std::move(t));
    }

    {
        TableDoc t;
        t.id = "table5_sga_lga";
        t.title = "Table 5: comparison for SGA and LGA fetuses (AC percentiles)";
        t.reference_method = inputs.baseline_name;
        const std::vector<std::string> methods = {inputs.ensemble_name, inputs.baseline_name};
        struct GroupDef {
            const char* name;
            const char* size_group;  // nullptr = all second+third trimester
        };
        const GroupDef defs[] = {
            {"Overall", nullptr},
            {"SGA (AC percentile < 10)", "sga"},
            {"severe SGA (AC percentile < 3)", "severe_sga"},
            {"LGA (AC percentile > 90)", "lga"},
            {"Normal size for GA", "normal"},
            {"SGA or LGA", "sga_or_lga"},
        };
        for (const auto& def : defs) {
            const SubgroupCriterion criterion =
                def.size_group
                    ? SubgroupCriterion::for_size(def.size_group)
                    : SubgroupCriterion::for_ga_range(cohort::kTrimester2StartDays, 1 << 20);
            const auto selected = select_group(pool, resolver, methods, criterion,
                                               std::string("sga_lga:") + def.name, stats);
            t.groups.push_back(make_block(def.name, selected, resolver, methods,
                                          inputs.baseline_name, true, stats));
        }
        suite.tables.push_back(std::move(t));

        // Figure 2: per-bin sign tests on the SGA groups.
        for (const char* group : {"sga", "severe_sga"}) {
            const auto selected =
                select_group(pool, resolver, methods, SubgroupCriterion::for_size(group),
                             std::string("fig2:") + group, stats);
            std::map<int, std::vector<const EvalVisit*>> bins;
            for (const auto& v : selected)
                bins[v.gt_ga / stats.bin_width_days].push_back(&v);
            for (const auto& [bin, visits] : bins) {
                Fig2Row row;
                row.group = group;
                row.bin = bin;
                row.n = visits.size();
                std::vector<double> diffs;
                double mae_m = 0.0, mae_b = 0.0;
                for (const auto* v : visits) {
                    const double gt = static_cast<double>(v->gt_ga);
                    const double em =
                        std::abs(*resolver.lookup(v->visit->visit_id, inputs.ensemble_name) - gt);
                    const double eb =
                        std::abs(*resolver.lookup(v->visit->visit_id, inputs.baseline_name) - gt);
                    mae_m += em;
                    mae_b += eb;
                    diffs.push_back(em - eb);
                }
                row.model_mae = mae_m / static_cast<double>(visits.size());
                row.baseline_mae = mae_b / static_cast<double>(visits.size());
                bool all_zero = true;
                for (double d : diffs)
                    if (d != 0.0) all_zero = false;
                row.p_value = all_zero ? 1.0 : evalstats::sign_test_median(diffs);
                suite.fig2.push_back(std::move(row));
            }
        }
    }

    // Figure 1: binned MAE over the overall selection.
    suite.fig1_methods = main_methods;
    for (const auto& bs : evalstats::window_bin(suite.overall_rows, stats.bin_width_days)) {
        Fig1Row row;
        row.bin = bs.bin;
        row.n = bs.n;
        row.mae = bs.mae;
        suite.fig1.push_back(std::move(row));
    }
    return suite;
}

std::vector<std::filesystem::path> write_report_suite(
    const ReportSuite& suite, const std::filesystem::path& out_dir,
    std::uint64_t seed, const std::vector<io::InputDigest>& input_digests) {
    std::filesystem::create_directories(out_dir);
    const std::string header = io::header_line("evaluate", seed, input_digests);
    std::vector<std::filesystem::path> written;

    for (const auto& table : suite.tables) {
        {
            std::ostringstream out;
            out << header << "\n";
            render_table_csv(table, out);
            const auto path = out_dir / (table.id + ".csv");
            io::write_text_file(path, out.str());
            written.push_back(path);
        }
        {
            std::ostringstream out;
            out << header << "\n";
            render_table_text(table, out);
            const auto path = out_dir / (table.id + ".txt");
            io::write_text_file(path, out.str());
            written.push_back(path);
        }
    }

    const int width = 28;  // four-week windows by default
    {
        std::ostringstream out;
        out << header << "\n";
        out << "bin_lo_days,bin_hi_days,n";
        for (const auto& m : suite.fig1_methods) out << ",mae_" << m;
        out << "\n";
        for (const auto& row : suite.fig1) {
            out << row.bin * width << "," << (row.bin + 1) * width << "," << row.n;
            for (const auto& m : suite.fig1_methods) {
                const auto it = row.mae.find(m);
                out << "," << (it == row.mae.end() ? "" : io::fmt_g(it->second, 10));
            }
            out << "\n";
        }
        const auto path = out_dir / "fig1_binned_mae.csv";
        io::write_text_file(path, out.str());
        written.push_back(path);
    }
    {
        std::ostringstream out;
        out << "# gnuplot script; run from this directory\n";
        out << "set datafile separator ','\n";
        out << "set key outside\n";
        out << "set xlabel 'ground truth GA (days)'\n";
        out << "set ylabel 'MAE (days)'\n";
        out << "set term png size 900,600\n";
        out << "set output 'fig1_binned_mae.png'\n";
        out << "plot ";
        for (std::size_t i = 0; i < suite.fig1_methods.size(); ++i) {
            if (i) out << ", ";
            out << "'fig1_binned_mae.csv' skip 2 using (($1+$2)/2):" << (4 + i)
                << " with linespoints title '" << suite.fig1_methods[i] << "'";
        }
        out << "\n";
        const auto path = out_dir / "fig1.gnuplot";
        io::write_text_file(path, out.str());
        written.push_back(path);
    }
    {
        std::ostringstream out;
        out << header << "\n";
        out << "group,bin_lo_days,bin_hi_days,n,model_mae,baseline_mae,p_value\n";
        for (const auto& row : suite.fig2)
            out << row.group << "," << row.bin * width << "," << (row.bin + 1) * width
                << "," << row.n << "," << io::fmt_g(row.model_mae, 10) << ","
                << io::fmt_g(row.baseline_mae, 10) << "," << io::fmt_g(row.p_value, 10)
                << "\n";
        const auto path = out_dir / "fig2_sga_signtest.csv";
        io::write_text_file(path, out.str());
        written.push_back(path);
    }
    {
        std::ostringstream out;
        out << "# gnuplot script; run from this directory\n";
        out << "set datafile separator ','\n";
        out << "set key outside\n";
        out << "set xlabel 'ground truth GA (days)'\n";
        out << "set ylabel 'MAE (days)'\n";
        out << "set term png size 900,600\n";
        out << "set output 'fig2_sga_signtest.png'\n";
        out << "plot 'fig2_sga_signtest.csv' skip 2 using (($2+$3)/2):($1 eq 'sga' ? $5 : 1/0) \\\n"
               "     with linespoints title 'model (SGA)', \\\n"
               "     '' skip 2 using (($2+$3)/2):($1 eq 'sga' ? $6 : 1/0) "
               "with linespoints title 'baseline (SGA)'\n";
        const auto path = out_dir / "fig2.gnuplot";
        io::write_text_file(path, out.str());
        written.push_back(path);
    }
    {
        std::ostringstream out;
        out << header << "\n";
        out << "patient_id,gt_ga";
        std::vector<std::string> methods = suite.fig1_methods;
        for (const auto& m : methods) out << ",err_" << m;
        out << "\n";
        for (const auto& row : suite.overall_rows) {
            out << row.patient_id << "," << io::fmt_g(row.gt_ga, 10);
            for (const auto& m : methods) {
                const auto it = row.errors.find(m);
                out << "," << (it == row.errors.end() ? "" : io::fmt_g(it->second, 10));
            }
            out << "\n";
        }
        const auto path = out_dir / "paired_errors.csv";
        io::write_text_file(path, out.str());
        written.push_back(path);
    }
    return written;
}

}  // namespace ga::report
