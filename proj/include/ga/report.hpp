#pragma once

// Builds the evaluation report suite: overall and subgroup comparison
// tables, four-week binned MAE series, and per-bin sign tests for the SGA
// groups. Output is CSV plus a plain-text rendering per table and gnuplot
// scripts for the binned series.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ga/cohort.hpp"
#include "ga/evalstats.hpp"
#include "ga/growth.hpp"
#include "ga/io.hpp"

namespace ga::report {

struct MethodRow {
    std::string method;
    evalstats::ErrorStats err;
    bool is_reference = false;
    bool has_diff = false;
    evalstats::DiffCi diff;
};

struct GroupBlock {
    std::string name;
    std::size_t n_patients = 0;
    double mean_gt = 0.0;
    double sd_gt = 0.0;
    std::vector<MethodRow> rows;
};

struct TableDoc {
    std::string id;     // file stem, e.g. "table1_overall"
    std::string title;
    std::string reference_method;
    // true: printed difference is method MAE - reference MAE (reference is
    // the clinical baseline); false: reference MAE - method MAE (reference
    // is the ensemble, as in the formula and SGA tables).
    bool diff_is_method_minus_ref = true;
    std::vector<GroupBlock> groups;
};

struct Fig1Row {
    int bin = 0;
    std::size_t n = 0;
    std::map<std::string, double> mae;
};

struct Fig2Row {
    std::string group;
    int bin = 0;
    std::size_t n = 0;
    double model_mae = 0.0;
    double baseline_mae = 0.0;
    double p_value = 1.0;
};

struct ReportSuite {
    std::vector<TableDoc> tables;
    std::vector<Fig1Row> fig1;
    std::vector<std::string> fig1_methods;
    std::vector<Fig2Row> fig2;
    std::vector<evalstats::PairedErrorRow> overall_rows;  // per selected visit
};

struct ReportInputs {
    const cohort::CohortManifest* cohort = nullptr;
    // visit_id -> method -> estimated GA (days). Model predictions and
    // formula baselines are kept separate only for bookkeeping; methods are
    // resolved against both.
    std::map<std::string, std::map<std::string, double>> predictions;
    std::map<std::string, std::map<std::string, double>> baselines;
    std::string baseline_name = "hadlock";
    std::string ensemble_name = "ensemble";
    std::vector<std::string> model_methods;  // display order
    std::vector<std::string> formula_methods;  // for the formula table
    const growth::PercentileTable* percentiles = nullptr;
    std::set<std::string> eval_patients;  // empty = all patients
    evalstats::StatsConfig stats;
};

ReportSuite build_report(const ReportInputs& inputs);

// One CSV + one text file per table, figure CSVs and gnuplot scripts, plus
// paired_errors.csv. Every file starts with the standard header line.
std::vector<std::filesystem::path> write_report_suite(
    const ReportSuite& suite, const std::filesystem::path& out_dir,
    std::uint64_t seed, const std::vector<io::InputDigest>& input_digests);

}  // namespace ga::report
