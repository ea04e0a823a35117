// step: generate and inspect filter banks, build and count models, train and
// evaluate at desk scale, benchmark the convolution paths.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 internal.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "step/accounting.hpp"
#include "step/arch.hpp"
#include "step/bank_io.hpp"
#include "step/checkpoint.hpp"
#include "step/cifar10.hpp"
#include "step/conv.hpp"
#include "step/error.hpp"
#include "step/io.hpp"
#include "step/parallel.hpp"
#include "step/train.hpp"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<int> parse_int_list(const std::string& text, std::size_t expected, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(what + ": '" + item + "' is not an integer");
        }
    }
    if (expected && out.size() != expected) {
        throw UsageError(what + " expects " + std::to_string(expected) + " comma-separated integers");
    }
    return out;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::string family;
    std::string shape;
    std::uint64_t seed = 0;
    std::uint64_t salt = 0;
    std::string out;
    std::string pgm;
};

int run_gen(const GenArgs& a) {
    const auto s = parse_int_list(a.shape, 4, "--shape");
    const step::BankShape shape{s[0], s[1], s[2], s[3]};
    if (shape.h < 1 || shape.w < 1 || shape.k < 1 || shape.f < 1) throw UsageError("--shape entries must be positive");
    const auto bank = step::gen_filter_bank(shape, step::parse_family(a.family), a.seed, a.salt);
    step::save_bank(bank, a.out);
    std::size_t pgms = 0;
    if (!a.pgm.empty()) pgms = step::export_kernels_pgm(bank, a.pgm).size();
    std::cout << "wrote " << a.out << " (" << shape.element_count() << " weights, sparsity "
              << step::sparsity(bank) << ")";
    if (pgms) std::cout << " and " << pgms << " PGM files";
    std::cout << "\n";
    return kOk;
}

// ---------------------------------------------------------------- inspect

json census_json(const step::ParamCensus& c) {
    return {{"trainable", c.trainable}, {"ternary", c.ternary}, {"binary", c.binary}, {"frozen_float", c.frozen_float}};
}

int run_inspect(const std::string& path) {
    const auto head = step::read_file(path);
    if (head.size() >= 4 && std::equal(head.begin(), head.begin() + 4, "STPC")) {
        const auto ck = step::decode_checkpoint(head);
        const auto& m = ck.model;
        json layers = json::array();
        const auto shapes = m.shape_walk(1);
        for (std::size_t i = 0; i < m.layers().size(); ++i) {
            const auto& o = shapes[i + 1];
            layers.push_back({{"index", i},
                              {"kind", std::string(step::layer_kind_name(step::kind_of(m.layers()[i])))},
                              {"output", {o.c, o.h, o.w}}});
        }
        const auto census = step::count_params(m);
        json j = {{"schema", "step-inspect"},
                  {"version", 1},
                  {"type", "checkpoint"},
                  {"trained_epochs", ck.trained_epochs},
                  {"input", {m.input_shape().c, m.input_shape().h, m.input_shape().w}},
                  {"num_classes", m.num_classes()},
                  {"census", census_json(census)},
                  {"memory_bytes", step::estimate_memory_bytes(census)},
                  {"layers", layers},
                  {"config", m.config_echo}};
        std::cout << j.dump(2) << "\n";
        return kOk;
    }
    const auto bank = step::load_bank(path);
    const auto& s = bank.shape();
    std::vector<std::size_t> nonzero(static_cast<std::size_t>(s.f), 0);
    for (int f = 0; f < s.f; ++f) {
        for (int c = 0; c < s.k; ++c) {
            const auto k = bank.kernel(f, c);
            nonzero[static_cast<std::size_t>(f)] +=
                static_cast<std::size_t>(std::count_if(k.values.begin(), k.values.end(), [](auto v) { return v != 0; }));
        }
    }
    json j = json::parse(step::bank_descriptor_json(bank, std::filesystem::path(path).filename().string()));
    j.erase("recipes");
    j["schema"] = "step-inspect";
    j["type"] = "bank";
    j["nonzero_per_filter"] = nonzero;
    std::cout << j.dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- build / count

step::ArchConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    auto cfg = step::load_arch_config(path);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

int run_build(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
    const auto cfg = load_config(config, seed);
    const auto model = step::build_model(cfg);
    const auto shapes = model.shape_walk(1);
    std::cout << cfg.name << " (" << step::weight_mode_name(cfg.mode) << ")\n";
    std::cout << "  input      " << step::to_string(shapes[0]) << "\n";
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
        std::printf("  %-10s %s\n", std::string(step::layer_kind_name(step::kind_of(model.layers()[i]))).c_str(),
                    step::to_string(shapes[i + 1]).c_str());
    }
    const auto census = step::count_params(model);
    std::cout << "  trainable " << census.trainable << ", frozen " << census.non_trainable() << "\n";
    if (!out.empty()) {
        step::save_checkpoint(model, out, 0);
        std::cout << "wrote " << out << "\n";
    }
    return kOk;
}

struct CountArgs {
    std::string config;
    std::string baseline;
    std::vector<std::int64_t> literal;
    bool ternary = false;
    bool binary = false;
    std::string name = "literal";
};

int run_count(const CountArgs& a) {
    std::vector<step::AccountingReport> reports;
    if (!a.literal.empty()) {
        if (a.literal.size() != 2) throw UsageError("--literal-counts takes TRAINABLE NON_TRAINABLE");
        if (a.ternary == a.binary) throw UsageError("--literal-counts needs exactly one of --ternary / --binary");
        if (a.literal[0] < 0 || a.literal[1] < 0) throw UsageError("counts must be non-negative");
        step::ParamCensus c;
        c.trainable = a.literal[0];
        (a.ternary ? c.ternary : c.binary) = a.literal[1];
        reports.push_back(step::make_report(a.name, c));
    } else {
        if (a.config.empty()) throw UsageError("count needs --config or --literal-counts");
        const auto cfg = load_config(a.config, std::nullopt);
        reports.push_back(step::make_report(cfg.name, step::count_params(step::build_model(cfg))));
        if (!a.baseline.empty()) {
            const auto mode = step::parse_weight_mode(a.baseline);
            auto twin = cfg.with_mode(mode);
            twin.name = cfg.name + "-" + std::string(step::weight_mode_name(mode));
            auto base = step::make_report(twin.name, step::count_params(step::build_model(twin)));
            step::attach_baseline(reports.front(), base);
            reports.push_back(base);
        }
    }
    std::cout << step::reports_to_json(reports) << "\n\n" << step::reports_to_table(reports);
    return kOk;
}

// ---------------------------------------------------------------- train / eval

struct TrainArgs {
    std::string config;
    std::string data;
    int epochs = 10;
    int subset = 0;
    int test_subset = 1000;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string log;
    bool resume = false;
    int batch = 64;
    double lr = 0.05;
    double weight_decay = 5e-4;
    std::string optimizer = "sgd";
    std::string schedule = "cosine";
    bool no_augment = false;
};

step::OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return step::OptimizerKind::Sgd;
    if (s == "adam") return step::OptimizerKind::Adam;
    throw UsageError("unknown optimizer '" + s + "'");
}

step::Schedule parse_schedule(const std::string& s) {
    if (s == "cosine") return step::Schedule::Cosine;
    if (s == "const") return step::Schedule::Const;
    throw UsageError("unknown schedule '" + s + "'");
}

int run_train(const TrainArgs& a) {
    step::TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.lr0 = a.lr;
    tc.weight_decay = a.weight_decay;
    tc.optimizer = parse_optimizer(a.optimizer);
    tc.schedule = parse_schedule(a.schedule);
    tc.augment = !a.no_augment;
    tc.validate();

    step::ModelGraph<float> model;
    int start = 0;
    if (a.resume) {
        if (!std::filesystem::exists(a.out)) throw UsageError("--resume: no checkpoint at " + a.out);
        auto ck = step::load_checkpoint(a.out);
        model = std::move(ck.model);
        start = static_cast<int>(ck.trained_epochs);
        tc.seed = a.seed.value_or(0);
        if (!a.seed) {
            // Keep the seed the run started with.
            try {
                tc.seed = step::parse_arch_config(model.config_echo, step::ConfigFormat::Json).seed;
            } catch (const step::Error&) {
            }
        }
    } else {
        if (a.config.empty()) throw UsageError("train needs --config (or --resume)");
        const auto cfg = load_config(a.config, a.seed);
        tc.seed = cfg.seed;
        model = step::build_model(cfg);
    }

    const auto train = step::load_cifar10(a.data, step::Split::Train, a.subset);
    step::LabeledImageBatch test;
    const bool have_test = step::cifar10_present(a.data, step::Split::Test);
    if (have_test) test = step::load_cifar10(a.data, step::Split::Test, a.test_subset);

    std::ofstream log;
    if (!a.log.empty()) {
        const bool append = a.resume && std::filesystem::exists(a.log);
        log.open(a.log, append ? std::ios::app : std::ios::trunc);
        if (!log) throw step::IoError("cannot open " + a.log);
        if (!append) log << "epoch,lr,train_loss,train_acc,eval_acc,wall_seconds\n";
    }
    if (start >= tc.epochs) {
        std::cout << "checkpoint already has " << start << " epochs\n";
    }
    if (start == 0 && !a.resume) step::save_checkpoint(model, a.out, 0);

    step::train_loop(model, train, have_test ? &test : nullptr, tc, start,
                     [&](const step::EpochRecord& r, const step::ModelGraph<float>& m) {
                         step::save_checkpoint(m, a.out, static_cast<std::uint64_t>(r.epoch));
                         step::TrainLog one{{r}};
                         const auto csv = one.to_csv();
                         const auto row = csv.substr(csv.find('\n') + 1);
                         if (log) log << row << std::flush;
                         std::cout << row << std::flush;
                     });
    return kOk;
}

int run_eval(const std::string& ckpt, const std::string& data, int subset, int batch) {
    const auto ck = step::load_checkpoint(ckpt);
    const auto test = step::load_cifar10(data, step::Split::Test, subset);
    const double acc = step::evaluate(ck.model, test, step::Mode::Eval, batch);
    const double qacc = step::evaluate(ck.model, test, step::Mode::EvalQuantized, batch);
    json j = {{"schema", "step-eval"},
              {"version", 1},
              {"samples", test.size()},
              {"trained_epochs", ck.trained_epochs},
              {"accuracy", acc},
              {"accuracy_quantized", qacc},
              {"quantized_delta", qacc - acc}};
    std::cout << j.dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------- bench

struct BenchShape {
    step::Shape4 input;
    int filters = 0;
    int kh = 0;
    int kw = 0;
    step::ConvGeometry geom;

    std::string label() const {
        std::ostringstream os;
        os << input.n << "x" << input.c << "x" << input.h << "x" << input.w << "_f" << filters << "_k" << kh << "x"
           << kw << "_s" << geom.stride << "_p" << geom.padding;
        return os.str();
    }
};

std::vector<BenchShape> default_bench_shapes() {
    return {
        {{8, 16, 32, 32}, 32, 3, 3, {1, 1}},
        {{8, 32, 16, 16}, 64, 3, 3, {1, 1}},
        {{8, 64, 8, 8}, 128, 3, 3, {1, 1}},
        {{8, 16, 32, 32}, 16, 5, 5, {1, 2}},
    };
}

// One shape per line: n,c,h,w,f,kh,kw[,stride,padding]. Blank lines and '#' comments are skipped.
std::vector<BenchShape> read_bench_shapes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw step::IoError("cannot open shapes file " + path);
    std::vector<BenchShape> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line.erase(std::find(line.begin(), line.end(), '#'), line.end());
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
                   line.end());
        if (line.empty()) continue;
        std::vector<int> v;
        try {
            v = parse_int_list(line, 0, "shapes line " + std::to_string(lineno));
        } catch (const UsageError& e) {
            throw step::FormatError(e.what());
        }
        if (v.size() != 7 && v.size() != 9) {
            throw step::FormatError("shapes line " + std::to_string(lineno) + ": expected 7 or 9 fields");
        }
        BenchShape s{{v[0], v[1], v[2], v[3]}, v[4], v[5], v[6], {}};
        if (v.size() == 9) s.geom = {v[7], v[8]};
        if (std::any_of(v.begin(), v.begin() + 7, [](int x) { return x < 1; }) || s.geom.stride < 1 ||
            s.geom.padding < 0) {
            throw step::FormatError("shapes line " + std::to_string(lineno) + ": sizes must be positive");
        }
        out.push_back(s);
    }
    return out;
}

template <class F>
double median_ns(F&& f, int repeat, int warmup) {
    for (int i = 0; i < warmup; ++i) f();
    std::vector<double> t;
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        t.push_back(std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(t.begin(), t.end());
    return t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
}

int run_bench(const std::string& shapes_path, int repeat, int warmup, const std::string& family,
              std::uint64_t seed) {
    if (repeat < 1) throw UsageError("--repeat must be >= 1");
    const auto shapes = shapes_path.empty() ? default_bench_shapes() : read_bench_shapes(shapes_path);
    const auto fam = step::parse_family(family);
    std::cout << "shape,path,wall_ns_per_output_elem,mults,adds\n";
    std::uint64_t salt = 0;
    for (const auto& s : shapes) {
        const auto bank = step::gen_filter_bank({s.kh, s.kw, s.input.c, s.filters}, fam, seed, salt++);
        const auto dense = step::decode_bank<float>(bank);
        const step::TernaryConvPlan plan(bank);
        step::PatternRng rng(step::mix64(seed ^ salt));
        step::Tensor4 x(s.input);
        for (auto& v : x.data()) v = static_cast<float>(rng.normal());

        step::OpCounts ref_ops, ter_ops;
        const auto ref = step::conv2d_reference_counted(x, dense, s.geom, ref_ops);
        const auto ter = step::conv2d_ternary_counted(x, plan, s.geom, ter_ops);
        if (!(ref == ter) || !(step::conv2d_ternary(x, plan, s.geom) == ref)) {
            std::cerr << "error: ternary and reference outputs differ for " << s.label() << "\n";
            return kInternal;
        }
        const auto elems = static_cast<double>(ref.data().size());
        const double t_ref = median_ns([&] { (void)step::conv2d_reference(x, dense, s.geom); }, repeat, warmup);
        const double t_ter = median_ns([&] { (void)step::conv2d_ternary(x, plan, s.geom); }, repeat, warmup);
        std::printf("%s,reference,%.4f,%llu,%llu\n", s.label().c_str(), t_ref / elems,
                    static_cast<unsigned long long>(ref_ops.mults), static_cast<unsigned long long>(ref_ops.adds));
        std::printf("%s,ternary,%.4f,%llu,%llu\n", s.label().c_str(), t_ter / elems,
                    static_cast<unsigned long long>(ter_ops.mults), static_cast<unsigned long long>(ter_ops.adds));
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured ternary pattern networks: banks, models, training and benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: STEP_THREADS or all cores)");

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a frozen filter bank");
    g->add_option("--family", gen.family, "cslbp, haar or random_binary")->required();
    g->add_option("--shape", gen.shape, "h,w,k,f")->required();
    g->add_option("--seed", gen.seed, "Generator seed");
    g->add_option("--salt", gen.salt, "Layer-position salt");
    g->add_option("--out", gen.out, "Output blob (descriptor goes to <out>.json)")->required();
    g->add_option("--pgm", gen.pgm, "Also export one PGM per kernel into this directory");

    std::string inspect_path;
    auto* ins = app.add_subcommand("inspect", "Summarize a bank blob or checkpoint");
    ins->add_option("path", inspect_path)->required();

    std::string build_config, build_out;
    std::optional<std::uint64_t> build_seed;
    auto* b = app.add_subcommand("build", "Build a model from an architecture config");
    b->add_option("--config", build_config)->required();
    b->add_option("--seed", build_seed);
    b->add_option("--out", build_out, "Write the initialized model as a checkpoint");

    CountArgs count;
    auto* c = app.add_subcommand("count", "Parameter census and memory estimate");
    c->add_option("--config", count.config);
    c->add_option("--baseline", count.baseline, "Twin to compare against: float or random_binary");
    c->add_option("--literal-counts", count.literal, "TRAINABLE NON_TRAINABLE")->expected(2);
    c->add_flag("--ternary", count.ternary, "Literal non-trainable weights are 2-bit");
    c->add_flag("--binary", count.binary, "Literal non-trainable weights are 1-bit");
    c->add_option("--name", count.name, "Row label for literal counts");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train on CIFAR-10 binary files");
    t->add_option("--config", train.config);
    t->add_option("--data", train.data, "Directory with data_batch_*.bin and test_batch.bin")->required();
    t->add_option("--epochs", train.epochs);
    t->add_option("--subset", train.subset, "Use the first n training images");
    t->add_option("--test-subset", train.test_subset, "Evaluate on the first n test images");
    t->add_option("--seed", train.seed);
    t->add_option("--out", train.out, "Checkpoint path (rewritten after every epoch)")->required();
    t->add_option("--log", train.log, "CSV training log");
    t->add_flag("--resume", train.resume, "Continue from the checkpoint at --out");
    t->add_option("--batch", train.batch);
    t->add_option("--lr", train.lr);
    t->add_option("--weight-decay", train.weight_decay);
    t->add_option("--optimizer", train.optimizer, "sgd or adam");
    t->add_option("--schedule", train.schedule, "cosine or const");
    t->add_flag("--no-augment", train.no_augment);

    std::string eval_ckpt, eval_data;
    int eval_subset = 1000, eval_batch = 256;
    auto* e = app.add_subcommand("eval", "Test accuracy of a checkpoint, float and quantized activation");
    e->add_option("--ckpt", eval_ckpt)->required();
    e->add_option("--data", eval_data)->required();
    e->add_option("--subset", eval_subset);
    e->add_option("--batch", eval_batch);

    std::string bench_shapes, bench_family = "haar";
    int bench_repeat = 5, bench_warmup = 1;
    std::uint64_t bench_seed = 0;
    auto* be = app.add_subcommand("bench", "Time reference and ternary convolution paths");
    be->add_option("--shapes", bench_shapes, "File with n,c,h,w,f,kh,kw[,stride,padding] per line");
    be->add_option("--repeat", bench_repeat);
    be->add_option("--warmup", bench_warmup);
    be->add_option("--family", bench_family);
    be->add_option("--seed", bench_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (threads > 0) step::set_worker_count(threads);
        if (g->parsed()) return run_gen(gen);
        if (ins->parsed()) return run_inspect(inspect_path);
        if (b->parsed()) return run_build(build_config, build_seed, build_out);
        if (c->parsed()) return run_count(count);
        if (t->parsed()) return run_train(train);
        if (e->parsed()) return run_eval(eval_ckpt, eval_data, eval_subset, eval_batch);
        if (be->parsed()) return run_bench(bench_shapes, bench_repeat, bench_warmup, bench_family, bench_seed);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kUsage;
    } catch (const step::ContractError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kUsage;
    } catch (const step::ShapeError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kUsage;
    } catch (const step::FormatError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return kData;
    } catch (const step::CorruptionError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return kData;
    } catch (const step::IoError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return kData;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
