#include "dentocc/experiments.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"

#include "dentocc/error.hpp"
#include "dentocc/random.hpp"

namespace dentocc {

std::vector<ToothEvaluation> evaluate_samples(const ToothReconstructor& model, std::span<const ToothSample* const> samples,
                                              const EvalConfig& config) {
    config.validate();
    std::vector<ToothEvaluation> out;
    for (const ToothSample* s : samples) {
        NoGradGuard no_grad;
        const ToothShape oracle(s->spec);
        const Tensor c = model.condition(s->record.cls, s->patch);
        out.push_back({s->record.id, s->record.cls.index(), evaluate_reconstruction(model.network(), c, oracle, config)});
    }
    return out;
}

std::vector<AblationVariant> ablation_variants() {
    return {{"CBN only", Conditioning::cbn, false},
            {"CX only", Conditioning::cx, false},
            {"CBN + tooth class", Conditioning::cbn, true},
            {"CX + tooth class", Conditioning::cx, true}};
}

void AblationConfig::validate() const {
    train.validate();
    eval.validate();
    if (seeds == 0) throw DomainError("ablation needs at least one seed");
}

std::uint64_t AblationConfig::run_seed(std::size_t s) const { return derive_seed(seed, 0xAB1A + s); }

double AblationRow::median_iou() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.metrics.iou.mean);
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<AblationRow> run_ablation(const Dataset& dataset, const AblationConfig& config, const LogFn& log) {
    config.validate();
    const auto train = dataset.split(Split::train);
    const auto val = dataset.split(Split::val);
    auto test = dataset.split(Split::test);
    if (train.empty()) throw DomainError("ablation: empty training split");
    if (test.empty()) throw DomainError("ablation: empty test split");

    std::vector<AblationRow> rows;
    for (const auto& variant : ablation_variants()) {
        AblationRow row{variant, {}};
        for (std::size_t s = 0; s < config.seeds; ++s) {
            AblationRun run;
            run.seed = config.run_seed(s);
            ReconstructorConfig rc;
            rc.net.conditioning = variant.conditioning;
            rc.net.alpha = config.alpha;
            rc.use_class_embedding = variant.class_embedding;
            ToothReconstructor model(rc, run.seed);
            TrainConfig tc = config.train;
            tc.seed = run.seed;
            run.fit = fit(model, train, val, tc);
            run.metrics = pool_metrics(evaluate_samples(model, test, config.eval), config.eval);
            if (log) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "%s seed %zu: best epoch %zu val acc %.4f test iou %.4f", variant.name.c_str(),
                              s, run.fit.best_epoch, run.fit.best_val_accuracy, run.metrics.iou.mean);
                log(buf);
            }
            row.runs.push_back(std::move(run));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

nlohmann::json seed_metrics(const PooledMetrics& m) {
    auto mean_or_null = [](const MetricSummary& s) -> nlohmann::json {
        if (s.runs.empty()) return nullptr;
        return {{"mean", s.mean}, {"std", s.std}};
    };
    return {{"iou", mean_or_null(m.iou)},
            {"chamfer_l1", mean_or_null(m.chamfer)},
            {"normal_consistency", mean_or_null(m.nc)},
            {"precision", mean_or_null(m.precision)},
            {"failures", m.failures}};
}

std::string mean_std_cell(const std::vector<AblationRun>& runs, const MetricSummary PooledMetrics::*field) {
    std::vector<double> means;
    for (const auto& r : runs) {
        const auto& s = r.metrics.*field;
        if (!s.runs.empty()) means.push_back(s.mean);
    }
    if (means.empty()) return "n/a";
    const MetricSummary s = summarize(means, {});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f ± %.3f", s.mean, s.std);
    return buf;
}

}  // namespace

std::string ablation_json(const std::vector<AblationRow>& rows, const AblationConfig& config) {
    nlohmann::json j;
    j["budget"] = {{"epochs", config.train.max_epochs},
                   {"steps_per_epoch", config.train.steps_per_epoch},
                   {"batch_size", config.train.batch_size},
                   {"points_per_step", config.train.points_per_step},
                   {"learning_rate", config.train.learning_rate},
                   {"patience", config.train.patience},
                   {"resolution", config.eval.dims},
                   {"repetitions", config.eval.repetitions},
                   {"surface_points", config.eval.surface_points}};
    j["alpha"] = config.alpha;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : row.runs) {
            runs.push_back({{"seed", r.seed},
                            {"best_epoch", r.fit.best_epoch},
                            {"best_val_accuracy", r.fit.best_val_accuracy},
                            {"steps", r.fit.steps},
                            {"metrics", seed_metrics(r.metrics)}});
        }
        j["rows"].push_back({{"variant", row.variant.name},
                             {"conditioning", conditioning_name(row.variant.conditioning)},
                             {"class_embedding", row.variant.class_embedding},
                             {"median_iou", row.median_iou()},
                             {"runs", std::move(runs)}});
    }
    return j.dump(2) + "\n";
}

std::string ablation_markdown(const std::vector<AblationRow>& rows) {
    std::string out = "| Method | IoU | Chamfer-L1 | NC | Precision | median IoU |\n|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        char median[32];
        std::snprintf(median, sizeof median, "%.3f", row.median_iou());
        out += "| " + row.variant.name + " | " + mean_std_cell(row.runs, &PooledMetrics::iou) + " | " +
               mean_std_cell(row.runs, &PooledMetrics::chamfer) + " | " + mean_std_cell(row.runs, &PooledMetrics::nc) +
               " | " + mean_std_cell(row.runs, &PooledMetrics::precision) + " | " + median + " |\n";
    }
    return out;
}

}  // namespace dentocc
