#include "dentocc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "dentocc/assembly.hpp"
#include "dentocc/experiments.hpp"
#include "dentocc/reconstructor.hpp"

namespace dentocc {

namespace fs = std::filesystem;

std::vector<std::string> config_to_args(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (key == "config") throw ConfigError("config line " + std::to_string(line_no) + ": nested config files are not supported");
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

std::vector<int> parse_class_list(const std::string& text) {
    std::set<int> classes;
    std::stringstream ss(text);
    std::string item;
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            throw ConfigError("bad class list '" + text + "'");
        }
        if (used != s.size()) throw ConfigError("bad class list '" + text + "'");
        if (v < 1 || v > 32) throw ConfigError("tooth class " + std::to_string(v) + " is outside 1..32");
        return v;
    };
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw ConfigError("bad class list '" + text + "'");
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos) {
            classes.insert(to_int(item));
        } else {
            const int lo = to_int(item.substr(0, dash)), hi = to_int(item.substr(dash + 1));
            if (lo > hi) throw ConfigError("bad class range '" + item + "'");
            for (int c = lo; c <= hi; ++c) classes.insert(c);
        }
    }
    if (classes.empty()) throw ConfigError("empty class list");
    return {classes.begin(), classes.end()};
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void require_parent_dir(const fs::path& path) {
    const auto parent = path.parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw IoError("directory " + parent.string() + " does not exist");
}

void require_positive(std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string(key) + " must be positive");
}

GridDims cube_dims(std::size_t r) {
    if (r < 2) throw ConfigError("resolution must be at least 2");
    return {r, r, r};
}

struct TrainFlags {
    double lr = 1e-4;
    std::size_t batch_size = 10;
    std::size_t points_per_step = 2048;
    std::size_t epochs = 250;
    std::size_t steps_per_epoch = 0;
    std::size_t patience = 20;
    std::size_t val_points = 10000;

    void add(CLI::App* app) {
        app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
        app->add_option("--batch-size", batch_size, "Shapes per step")->capture_default_str();
        app->add_option("--points-per-step", points_per_step, "Points per shape per step")->capture_default_str();
        app->add_option("--epochs", epochs, "Maximum epochs")->capture_default_str();
        app->add_option("--steps-per-epoch", steps_per_epoch, "Steps per epoch (0: one pass over the training shapes)")
            ->capture_default_str();
        app->add_option("--patience", patience, "Early-stopping patience in epochs")->capture_default_str();
        app->add_option("--val-points", val_points, "Validation points per shape (0: all)")->capture_default_str();
    }

    TrainConfig config(std::uint64_t seed) const {
        TrainConfig c;
        c.learning_rate = lr;
        c.batch_size = batch_size;
        c.points_per_step = points_per_step;
        c.max_epochs = epochs;
        c.steps_per_epoch = steps_per_epoch;
        c.patience = patience;
        c.val_points = val_points;
        c.seed = seed;
        try {
            c.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        return c;
    }
};

struct EvalFlags {
    std::size_t resolution = 128;
    double iso = kDefaultIso;
    std::size_t repetitions = 10;
    std::size_t surface_points = 100000;

    void add(CLI::App* app) {
        app->add_option("--resolution", resolution, "Extraction lattice per axis")->capture_default_str();
        app->add_option("--iso", iso, "Isosurface level")->capture_default_str();
        app->add_option("--repetitions", repetitions, "Metric repetitions")->capture_default_str();
        app->add_option("--surface-points", surface_points, "Surface samples per mesh")->capture_default_str();
    }

    EvalConfig config(std::uint64_t seed) const {
        EvalConfig c;
        c.dims = cube_dims(resolution);
        c.iso = iso;
        c.repetitions = repetitions;
        c.surface_points = surface_points;
        c.seed = seed;
        try {
            c.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        return c;
    }
};

PatchImage load_patch(const fs::path& path) {
    PatchImage patch;
    if (path.extension() == ".ocdt") {
        const auto archive = TensorArchive::load(path);
        const auto& t = archive.at("patch");
        if (t.shape != Shape{kPatchSize, kPatchSize}) throw DimensionError("patch tensor must be 64x64");
        patch = GrayImage(kPatchSize, kPatchSize);
        patch.pixels = t.to_doubles();
    } else {
        patch = read_pgm(path);
    }
    validate_patch(patch);
    return patch;
}

Dataset require_dataset(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "manifest.json")) throw IoError("no dataset at " + dir + " (manifest.json missing)");
    return load_dataset(dir);
}

std::vector<const ToothSample*> select_split(const Dataset& ds, const std::string& split) {
    if (split == "all") {
        std::vector<const ToothSample*> all;
        for (const auto& s : ds.samples) all.push_back(&s);
        return all;
    }
    return ds.split(parse_split(split));
}

std::string history_csv(const FitResult& r) {
    std::string out = "epoch,train_loss,val_accuracy\n";
    char buf[96];
    for (const auto& e : r.history) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_accuracy);
        out += buf;
    }
    return out;
}

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(const std::vector<std::string>& raw_args);

private:
    void log(const std::string& msg) { err_ << "[dentocc] " << msg << "\n" << std::flush; }

    void cmd_synth();
    void cmd_train();
    void cmd_reconstruct();
    void cmd_eval();
    void cmd_ablate();
    void cmd_assemble();

    std::ostream& out_;
    std::ostream& err_;

    // synth
    std::string synth_out, synth_classes = "1-16";
    std::size_t synth_per_class = 20, synth_points = kDefaultPointCount;
    std::uint64_t synth_seed = 0;

    // train
    std::string train_data, train_out, train_history, train_conditioning = "cx";
    double train_alpha = 2.0;
    bool train_class_embedding = true, train_overfit_one = false;
    std::uint64_t train_seed = 0;
    TrainFlags train_flags;
    CLI::App* train_app = nullptr;

    // reconstruct
    std::string rec_checkpoint, rec_patch, rec_out;
    int rec_class = 0;
    std::size_t rec_resolution = 128;
    double rec_iso = kDefaultIso;

    // eval
    std::string eval_checkpoint, eval_data, eval_out, eval_split = "test";
    std::size_t eval_max_teeth = 0;
    std::uint64_t eval_seed = 0;
    EvalFlags eval_flags;

    // ablate
    std::string abl_data, abl_out, abl_table;
    std::size_t abl_seeds = 3;
    std::uint64_t abl_seed = 0;
    double abl_alpha = 2.0;
    TrainFlags abl_train;
    EvalFlags abl_eval;

    // assemble
    std::string asm_checkpoint, asm_data, asm_meshes, asm_out, asm_jaw = "both", asm_split = "all";
    double asm_width = 0.9, asm_depth = 0.45, asm_exponent = 0.8, asm_iso = kDefaultIso;
    std::size_t asm_resolution = 64;
};

void Cli::cmd_synth() {
    DatasetOptions o;
    o.classes = parse_class_list(synth_classes);
    o.per_class = synth_per_class;
    o.points = synth_points;
    o.seed = synth_seed;
    require_positive(o.per_class, "per-class");
    require_positive(o.points, "points");
    if (synth_out.empty()) throw ConfigError("--out is required");
    log("building " + std::to_string(o.classes.size() * o.per_class) + " samples in " + synth_out);
    const Dataset ds = dataset_build(o, synth_out);
    const auto c = split_counts(ds.samples.size());
    out_ << "wrote " << ds.samples.size() << " samples (train " << c.train << ", val " << c.val << ", test " << c.test
         << ") to " << synth_out << "\n";
}

void Cli::cmd_train() {
    const bool epochs_given = train_app->count("--epochs") > 0;
    const bool steps_given = train_app->count("--steps-per-epoch") > 0;
    TrainFlags flags = train_flags;
    if (train_overfit_one) {
        if (!epochs_given) flags.epochs = 20;
        if (!steps_given) flags.steps_per_epoch = 100;
    }
    const TrainConfig tc = flags.config(train_seed);
    ReconstructorConfig rc;
    try {
        rc.net.conditioning = parse_conditioning(train_conditioning);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    rc.net.alpha = train_alpha;
    rc.use_class_embedding = train_class_embedding;
    if (train_out.empty()) throw ConfigError("--out is required");
    const fs::path history = train_history.empty() ? fs::path(train_out + ".csv") : fs::path(train_history);
    require_parent_dir(train_out);
    require_parent_dir(history);

    const Dataset ds = require_dataset(train_data);
    std::vector<const ToothSample*> train = ds.split(Split::train);
    std::vector<const ToothSample*> val = ds.split(Split::val);
    if (train_overfit_one) {
        if (ds.samples.empty()) throw DomainError("dataset is empty");
        train = {train.empty() ? &ds.samples.front() : train.front()};
        val = train;
        log("overfitting " + train.front()->record.id);
    }
    if (train.empty()) throw DomainError("dataset has no training samples");

    ToothReconstructor model(rc, train_seed);
    const FitResult r = fit(model, train, val, tc, [&](const EpochRecord& e) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %zu loss %.5f val acc %.5f", e.epoch, e.train_loss, e.val_accuracy);
        log(buf);
    });
    model.save(train_out);
    write_text(history, history_csv(r));
    out_ << "best epoch " << r.best_epoch << " val accuracy " << r.best_val_accuracy << " after " << r.steps
         << " steps; checkpoint " << train_out << "\n";
}

void Cli::cmd_reconstruct() {
    const GridDims dims = cube_dims(rec_resolution);
    if (!(rec_iso > 0.0 && rec_iso < 1.0)) throw ConfigError("iso must lie in (0,1)");
    if (rec_class < 1 || rec_class > 32) throw ConfigError("--class must lie in 1..32");
    if (rec_out.empty()) throw ConfigError("--out is required");
    require_parent_dir(rec_out);
    const auto model = ToothReconstructor::load(rec_checkpoint);
    const PatchImage patch = load_patch(rec_patch);
    NoGradGuard no_grad;
    const Tensor c = model.condition(ToothClass(rec_class), patch);
    TriangleMesh mesh = extract_mesh(eval_grid(model.network(), c, dims), rec_iso);
    if (mesh.empty()) {
        log("warning: the isosurface at iso " + std::to_string(rec_iso) + " is empty; writing an empty mesh");
    }
    export_mesh(mesh, rec_out);
    out_ << "wrote " << mesh.vertices.size() << " vertices, " << mesh.faces.size() << " faces to " << rec_out << "\n";
}

void Cli::cmd_eval() {
    const EvalConfig ec = eval_flags.config(eval_seed);
    if (eval_out.empty()) throw ConfigError("--out is required");
    if (eval_split != "all") {
        try {
            (void)parse_split(eval_split);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
    }
    require_parent_dir(eval_out);
    const auto model = ToothReconstructor::load(eval_checkpoint);
    const Dataset ds = require_dataset(eval_data);
    auto samples = select_split(ds, eval_split);
    if (eval_max_teeth > 0 && samples.size() > eval_max_teeth) samples.resize(eval_max_teeth);
    if (samples.empty()) throw DomainError("split '" + eval_split + "' is empty");
    log("evaluating " + std::to_string(samples.size()) + " teeth");
    const auto teeth = evaluate_samples(model, samples, ec);
    write_text(eval_out, metrics_report_json(teeth, ec));
    const PooledMetrics pooled = pool_metrics(teeth, ec);
    out_ << "iou " << pooled.iou.mean << " ± " << pooled.iou.std << "; report " << eval_out << "\n";
}

void Cli::cmd_ablate() {
    AblationConfig ac;
    ac.train = abl_train.config(0);
    ac.eval = abl_eval.config(abl_seed);
    ac.seeds = abl_seeds;
    ac.seed = abl_seed;
    ac.alpha = abl_alpha;
    require_positive(abl_seeds, "seeds");
    if (abl_out.empty()) throw ConfigError("--out is required");
    const fs::path table = abl_table.empty() ? fs::path(abl_out).replace_extension(".md") : fs::path(abl_table);
    require_parent_dir(abl_out);
    require_parent_dir(table);
    const Dataset ds = require_dataset(abl_data);
    const auto rows = run_ablation(ds, ac, [&](const std::string& m) { log(m); });
    write_text(abl_out, ablation_json(rows, ac));
    const std::string md = ablation_markdown(rows);
    write_text(table, md);
    out_ << md;
}

void Cli::cmd_assemble() {
    ArchCurve curve{asm_width, asm_depth, asm_exponent};
    try {
        curve.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (asm_jaw != "upper" && asm_jaw != "lower" && asm_jaw != "both") throw ConfigError("--jaw must be upper, lower or both");
    const GridDims dims = cube_dims(asm_resolution);
    if (!(asm_iso > 0.0 && asm_iso < 1.0)) throw ConfigError("iso must lie in (0,1)");
    if (asm_out.empty()) throw ConfigError("--out is required");
    if (asm_meshes.empty() == asm_checkpoint.empty()) throw ConfigError("give exactly one of --meshes or --checkpoint");
    require_parent_dir(asm_out);

    std::vector<std::pair<ToothClass, TriangleMesh>> teeth;
    if (!asm_meshes.empty()) {
        if (!fs::is_directory(asm_meshes)) throw IoError("mesh directory " + asm_meshes + " does not exist");
        for (int c = 1; c <= 32; ++c) {
            char name[32];
            std::snprintf(name, sizeof name, "tooth_%02d.obj", c);
            const fs::path p = fs::path(asm_meshes) / name;
            if (fs::exists(p)) teeth.emplace_back(ToothClass(c), import_mesh(p));
        }
    } else {
        const auto model = ToothReconstructor::load(asm_checkpoint);
        const Dataset ds = require_dataset(asm_data);
        std::set<int> done;
        NoGradGuard no_grad;
        for (const ToothSample* s : select_split(ds, asm_split)) {
            if (!done.insert(s->record.cls.index()).second) continue;
            const Tensor c = model.condition(s->record.cls, s->patch);
            teeth.emplace_back(s->record.cls, extract_mesh(eval_grid(model.network(), c, dims), asm_iso));
            log("reconstructed class " + std::to_string(s->record.cls.index()) + " from " + s->record.id);
        }
    }
    if (teeth.empty()) throw DomainError("no teeth to assemble");

    const JawLayout layout = layout_slots(curve, 16);
    TriangleMesh combined;
    for (const Jaw jaw : {Jaw::upper, Jaw::lower}) {
        if (asm_jaw == "upper" && jaw != Jaw::upper) continue;
        if (asm_jaw == "lower" && jaw != Jaw::lower) continue;
        std::vector<std::pair<ToothClass, TriangleMesh>> subset;
        for (const auto& t : teeth) {
            if (t.first.upper() == (jaw == Jaw::upper)) subset.push_back(t);
        }
        const TriangleMesh placed = place_teeth(subset, layout, jaw);
        const auto base = static_cast<std::uint32_t>(combined.vertices.size());
        combined.vertices.insert(combined.vertices.end(), placed.vertices.begin(), placed.vertices.end());
        for (const auto& f : placed.faces) combined.faces.push_back({base + f[0], base + f[1], base + f[2]});
    }
    export_mesh(combined, asm_out);
    out_ << "assembled " << teeth.size() << " teeth (" << combined.faces.size() << " faces) into " << asm_out << "\n";
}

int Cli::run(const std::vector<std::string>& raw_args) {
    // Expand --config FILE right after the subcommand so explicit flags win.
    std::vector<std::string> args;
    std::vector<std::string> from_config;
    for (std::size_t i = 0; i < raw_args.size(); ++i) {
        const std::string& a = raw_args[i];
        std::string file;
        if (a == "--config") {
            if (i + 1 >= raw_args.size()) throw ConfigError("--config needs a file");
            file = raw_args[++i];
        } else if (a.rfind("--config=", 0) == 0) {
            file = a.substr(9);
        } else {
            args.push_back(a);
            continue;
        }
        std::ifstream in(file);
        if (!in) throw IoError("cannot read config file " + file);
        std::stringstream ss;
        ss << in.rdbuf();
        const auto extra = config_to_args(ss.str());
        from_config.insert(from_config.end(), extra.begin(), extra.end());
    }
    if (!from_config.empty()) {
        if (args.empty()) throw ConfigError("--config needs a subcommand");
        args.insert(args.begin() + 1, from_config.begin(), from_config.end());
    }

    CLI::App app{"Conditional implicit occupancy reconstruction of synthetic teeth", "dentocc"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic tooth dataset");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--classes", synth_classes, "Tooth classes, e.g. 1-16 or 1,3,14")->capture_default_str();
    synth->add_option("--per-class", synth_per_class, "Samples per class")->capture_default_str();
    synth->add_option("--points", synth_points, "Labelled points per sample")->capture_default_str();
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

    train_app = app.add_subcommand("train", "Train a reconstructor on a dataset");
    train_app->add_option("--data", train_data, "Dataset directory")->required();
    train_app->add_option("--out", train_out, "Checkpoint path")->required();
    train_app->add_option("--history", train_history, "Loss history CSV (default: <out>.csv)");
    train_app->add_option("--conditioning", train_conditioning, "cx, cbn or none")->capture_default_str();
    train_app->add_option("--alpha", train_alpha, "Excitation scale")->capture_default_str();
    train_app->add_option("--class-embedding", train_class_embedding, "Add the class embedding to the condition")
        ->capture_default_str();
    train_app->add_flag("--overfit-one", train_overfit_one, "Train and validate on a single shape");
    train_app->add_option("--seed", train_seed, "Initialization and sampling seed")->capture_default_str();
    train_flags.add(train_app);

    auto* rec = app.add_subcommand("reconstruct", "Reconstruct one tooth mesh from its class and patch");
    rec->add_option("--checkpoint", rec_checkpoint, "Model checkpoint")->required();
    rec->add_option("--class", rec_class, "Tooth class (1..32)")->required();
    rec->add_option("--patch", rec_patch, "Patch image (.pgm or .ocdt with a 'patch' tensor)")->required();
    rec->add_option("--out", rec_out, "Output OBJ")->required();
    rec->add_option("--resolution", rec_resolution, "Extraction lattice per axis")->capture_default_str();
    rec->add_option("--iso", rec_iso, "Isosurface level")->capture_default_str();

    auto* ev = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
    ev->add_option("--checkpoint", eval_checkpoint, "Model checkpoint")->required();
    ev->add_option("--data", eval_data, "Dataset directory")->required();
    ev->add_option("--out", eval_out, "Metrics JSON")->required();
    ev->add_option("--split", eval_split, "train, val, test or all")->capture_default_str();
    ev->add_option("--max-teeth", eval_max_teeth, "Evaluate at most this many teeth (0: all)")->capture_default_str();
    ev->add_option("--seed", eval_seed, "Surface-sampling seed")->capture_default_str();
    eval_flags.add(ev);

    auto* abl = app.add_subcommand("ablate", "Train and compare the four conditioning variants");
    abl->add_option("--data", abl_data, "Dataset directory")->required();
    abl->add_option("--out", abl_out, "Report JSON")->required();
    abl->add_option("--table", abl_table, "Markdown table (default: <out> with .md)");
    abl->add_option("--seeds", abl_seeds, "Seeds per variant")->capture_default_str();
    abl->add_option("--seed", abl_seed, "Base seed")->capture_default_str();
    abl->add_option("--alpha", abl_alpha, "Excitation scale")->capture_default_str();
    abl_train.add(abl);
    abl_eval.add(abl);

    auto* asmb = app.add_subcommand("assemble", "Lay reconstructed teeth out along an arch curve");
    asmb->add_option("--out", asm_out, "Output OBJ")->required();
    asmb->add_option("--meshes", asm_meshes, "Directory of tooth_NN.obj meshes");
    asmb->add_option("--checkpoint", asm_checkpoint, "Reconstruct teeth with this checkpoint");
    asmb->add_option("--data", asm_data, "Dataset providing one patch per class (with --checkpoint)");
    asmb->add_option("--split", asm_split, "Dataset split to draw patches from")->capture_default_str();
    asmb->add_option("--jaw", asm_jaw, "upper, lower or both")->capture_default_str();
    asmb->add_option("--arch-width", asm_width, "Arch width")->capture_default_str();
    asmb->add_option("--arch-depth", asm_depth, "Arch depth")->capture_default_str();
    asmb->add_option("--arch-exponent", asm_exponent, "Arch exponent")->capture_default_str();
    asmb->add_option("--resolution", asm_resolution, "Extraction lattice per axis")->capture_default_str();
    asmb->add_option("--iso", asm_iso, "Isosurface level")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out_ << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out_ << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err_ << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (synth->parsed()) cmd_synth();
    else if (train_app->parsed()) cmd_train();
    else if (rec->parsed()) cmd_reconstruct();
    else if (ev->parsed()) cmd_eval();
    else if (abl->parsed()) cmd_ablate();
    else if (asmb->parsed()) cmd_assemble();
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        Cli cli(out, err);
        return cli.run(args);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CheckpointError& e) {
        err << "checkpoint error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace dentocc
