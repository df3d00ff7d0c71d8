// sfv: command-line front end for training, encoding, pooling, classification
// and the benchmark / similarity reports.
//
// Exit status: 0 success, 2 usage error, 1 runtime error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfv/sfv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared per-invocation state, used to write the metadata sidecars.
struct RunContext {
  std::string command;
  std::vector<std::string> argv;
  CLI::App* sub = nullptr;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

json option_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (name.empty() || name == "help") continue;
    if (opt->get_expected_max() == 0) {
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      cfg[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_sidecar(const RunContext& ctx, const fs::path& output, const json& extra = json::object()) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  json meta{{"schema_version", sfv::io::kReportSchemaVersion},
            {"tool", "sfv"},
            {"version", SFV_VERSION},
            {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                  "." + std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__},
            {"command", ctx.command},
            {"argv", ctx.argv},
            {"config", option_config(*ctx.sub)},
            {"seed", ctx.seed},
            {"threads", ctx.threads},
            {"output", output.filename().string()},
            {"wall_time_seconds", wall}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  sfv::io::save_json(fs::path(output.string() + ".meta.json"), meta);
}

void save_json_output(const RunContext& ctx, const fs::path& path, const json& j, const json& extra = json::object()) {
  sfv::io::save_json(path, j);
  write_sidecar(ctx, path, extra);
}

// Manifest rows: path,label,split with paths relative to the manifest.
struct ManifestEntry {
  fs::path path;
  std::size_t label = 0;
  std::string split;
};

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  const auto bytes = sfv::io::read_file_bytes(manifest);
  const auto rows = sfv::io::parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  if (rows.empty()) throw sfv::FormatError(manifest.string() + ": empty manifest");
  const auto& header = rows.front();
  if (header.size() < 3 || header[0] != "path" || header[1] != "label" || header[2] != "split")
    throw sfv::FormatError(manifest.string() + ": header must be path,label,split");
  std::vector<ManifestEntry> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 3)
      throw sfv::FormatError(manifest.string() + ": row " + std::to_string(i) + " has fewer than 3 cells");
    ManifestEntry e;
    e.path = fs::path(r[0]).is_absolute() ? fs::path(r[0]) : manifest.parent_path() / r[0];
    try {
      e.label = static_cast<std::size_t>(std::stoul(r[1]));
    } catch (const std::exception&) {
      throw sfv::FormatError(manifest.string() + ": row " + std::to_string(i) + " has a non-integer label");
    }
    e.split = r[2];
    out.push_back(std::move(e));
  }
  return out;
}

// Descriptor sets from --in files or a manifest (optionally only one split).
std::vector<sfv::DescriptorSet> load_sets(const std::vector<std::string>& inputs, const std::string& manifest,
                                          const std::optional<std::string>& split = std::nullopt) {
  if (inputs.empty() == manifest.empty()) throw UsageError("exactly one of --in or --manifest is required");
  std::vector<sfv::DescriptorSet> sets;
  if (!manifest.empty()) {
    for (const auto& e : read_manifest(manifest))
      if (!split || e.split == *split) sets.push_back(sfv::io::read_descriptors(e.path));
  } else {
    for (const auto& p : inputs) sets.push_back(sfv::io::read_descriptors(p));
  }
  if (sets.empty()) throw sfv::InputError("no descriptor files selected");
  return sets;
}

std::vector<sfv::DescriptorSet> maybe_project(std::vector<sfv::DescriptorSet> sets, const std::string& pca_path) {
  if (pca_path.empty()) return sets;
  const auto pca = sfv::io::load_pca(pca_path);
  for (auto& s : sets) s = sfv::pca_apply(pca, s);
  return sets;
}

void check_k(std::size_t k, std::size_t m) {
  if (k < 1 || k > m)
    throw UsageError("--k " + std::to_string(k) + " must lie in [1, M] with M = " + std::to_string(m));
}

void write_code_rows(const fs::path& path, const std::vector<std::vector<double>>& rows) {
  sfv::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  sfv::io::write_descriptors(path, m);
}

// ---- subcommands -----------------------------------------------------------

struct SynthOpts {
  std::string task = "blobs";
  std::string out;
  std::size_t classes = 10, train = 0, test = 0, descriptors = 0, dim = 0;
};

void run_synth(RunContext& ctx, const SynthOpts& o) {
  sfv::synth::LabeledImages data;
  if (o.task == "blobs") {
    sfv::synth::BlobTaskConfig c;
    c.classes = o.classes;
    if (o.train) c.train_per_class = o.train;
    if (o.test) c.test_per_class = o.test;
    if (o.descriptors) c.descriptors_per_image = o.descriptors;
    if (o.dim) c.dim = o.dim;
    c.seed = ctx.seed;
    data = sfv::synth::blob_task(c);
  } else {
    sfv::synth::VarianceContrastConfig c;
    if (o.train) c.train_per_class = o.train;
    if (o.test) c.test_per_class = o.test;
    if (o.descriptors) c.descriptors_per_image = o.descriptors;
    if (o.dim) c.dim = o.dim;
    c.seed = ctx.seed;
    data = sfv::synth::variance_contrast_task(c);
  }
  const fs::path dir(o.out);
  fs::create_directories(dir);
  sfv::io::CsvTable manifest({"path", "label", "split"});
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%05zu.fvd", i);
    sfv::io::write_descriptors(dir / name, data.images[i]);
    manifest.add_row(sfv::io::CsvTable::Row().add(name).add(data.labels[i]).add(data.is_train[i] ? "train" : "test"));
  }
  const fs::path mpath = dir / "manifest.csv";
  sfv::io::write_csv(mpath, manifest);
  write_sidecar(ctx, mpath, {{"images", data.images.size()}, {"classes", data.class_count}});
  std::cout << "wrote " << data.images.size() << " images to " << dir.string() << "\n";
}

struct TrainGmmOpts {
  std::vector<std::string> in;
  std::string manifest, out, pca, codebook_out;
  std::size_t m = 256, max_iter = 100, per_image = 0;
  double tol = 1e-6;
};

void run_train_gmm(RunContext& ctx, const TrainGmmOpts& o) {
  if (o.m < 1) throw UsageError("--M must be >= 1");
  const auto sets = maybe_project(load_sets(o.in, o.manifest, o.manifest.empty() ? std::nullopt
                                                                                 : std::optional<std::string>("train")),
                                  o.pca);
  const auto pooled = sfv::synth::pool_descriptors(sets, o.per_image ? o.per_image : SIZE_MAX);
  sfv::EmConfig cfg;
  cfg.seed = ctx.seed;
  cfg.max_iterations = o.max_iter;
  cfg.tolerance = o.tol;
  cfg.threads = ctx.threads;
  const auto fit = sfv::em_fit(pooled, o.m, cfg);
  const sfv::io::TrainingMetadata meta{ctx.seed, fit.log.iterations, fit.log.final_log_likelihood()};
  save_json_output(ctx, o.out, sfv::io::gmm_to_json(fit.gmm, meta),
                   {{"descriptors", pooled.size()},
                    {"converged", fit.log.converged},
                    {"log_likelihood_trace", fit.log.log_likelihood},
                    {"reseeds", fit.log.reseeds.size()}});
  if (!o.codebook_out.empty()) {
    sfv::KMeansConfig kc;
    kc.seed = ctx.seed;
    save_json_output(ctx, o.codebook_out, sfv::io::codebook_to_json(sfv::kmeans(pooled, o.m, kc), {ctx.seed, 0}));
  }
  std::cout << "gmm: M=" << o.m << " D=" << pooled.dim() << " iterations=" << fit.log.iterations
            << " mean log-likelihood=" << fit.log.final_log_likelihood() << "\n";
}

struct TrainPcaOpts {
  std::vector<std::string> in;
  std::string manifest, out;
  std::size_t dim = 64, per_image = 0;
};

void run_train_pca(RunContext& ctx, const TrainPcaOpts& o) {
  const auto sets =
      load_sets(o.in, o.manifest, o.manifest.empty() ? std::nullopt : std::optional<std::string>("train"));
  const auto pooled = sfv::synth::pool_descriptors(sets, o.per_image ? o.per_image : SIZE_MAX);
  if (o.dim < 1 || o.dim > pooled.dim())
    throw UsageError("--dim " + std::to_string(o.dim) + " must lie in [1, " + std::to_string(pooled.dim()) + "]");
  const auto pca = sfv::pca_fit(pooled, o.dim);
  save_json_output(ctx, o.out, sfv::io::pca_to_json(pca, {ctx.seed, 0}), {{"descriptors", pooled.size()}});
  std::cout << "pca: " << pooled.dim() << " -> " << o.dim << "\n";
}

struct EncodeOpts {
  std::string mode = "sfv";
  std::size_t k = 5;
  std::string gmm, codebook, manifest, out, pca;
  std::vector<std::string> in;
  bool no_normalize = false;
};

void run_encode(RunContext& ctx, const EncodeOpts& o) {
  const auto kind = sfv::parse_encoder_kind(o.mode);
  std::optional<sfv::GaussianMixture> gmm;
  std::optional<sfv::Codebook> codebook;
  if (kind == sfv::EncoderKind::kBow) {
    if (o.codebook.empty()) throw UsageError("--codebook is required for --mode bow");
    codebook = sfv::io::load_codebook(o.codebook);
  } else {
    if (o.gmm.empty()) throw UsageError("--gmm is required for --mode " + o.mode);
    gmm = sfv::io::load_gmm(o.gmm);
    if (kind == sfv::EncoderKind::kSfv) check_k(o.k, gmm->components());
  }
  const auto sets = maybe_project(load_sets(o.in, o.manifest), o.pca);
  std::vector<std::vector<double>> rows;
  for (const auto& s : sets) {
    if (kind == sfv::EncoderKind::kBow) {
      rows.push_back(sfv::bow_encode(*codebook, s).values);
    } else {
      const auto code = kind == sfv::EncoderKind::kFv ? sfv::fv_encode(*gmm, s, !o.no_normalize, ctx.threads)
                                                      : sfv::sfv_encode(*gmm, s, o.k, !o.no_normalize, ctx.threads);
      rows.emplace_back(code.values().begin(), code.values().end());
    }
  }
  write_code_rows(o.out, rows);
  write_sidecar(ctx, o.out, {{"codes", rows.size()}, {"code_length", rows.front().size()}});
  std::cout << "encoded " << rows.size() << " set(s), code length " << rows.front().size() << "\n";
}

struct PoolOpts {
  std::string method = "sfv";
  std::size_t k = 5;
  double lambda = 1.0;
  std::string gmm, manifest, out, pca;
  std::vector<std::string> in;
  bool no_normalize = false;
};

void run_pool(RunContext& ctx, const PoolOpts& o) {
  const std::map<std::string, sfv::PoolingMode> modes{
      {"gmp", sfv::PoolingMode::kGmp}, {"sfv", sfv::PoolingMode::kSfv}, {"sfv-limit", sfv::PoolingMode::kSfvLimit}};
  const auto mode = modes.at(o.method);
  if (mode != sfv::PoolingMode::kSfvLimit && !(o.lambda > 0.0))
    throw UsageError("--lambda must be positive for --method " + o.method);
  const auto gmm = sfv::io::load_gmm(o.gmm);
  if (mode != sfv::PoolingMode::kGmp) check_k(o.k, gmm.components());
  const auto sets = maybe_project(load_sets(o.in, o.manifest), o.pca);
  std::vector<std::vector<double>> rows;
  for (const auto& s : sets) {
    const auto res = sfv::pool_subtasks(gmm, s, mode, o.lambda, o.k);
    std::vector<double> v(res.pooled.values().begin(), res.pooled.values().end());
    if (!o.no_normalize) {
      sfv::power_normalize_inplace(v);
      sfv::l2_normalize_inplace(v);
    }
    rows.push_back(std::move(v));
  }
  write_code_rows(o.out, rows);
  write_sidecar(ctx, o.out, {{"codes", rows.size()}, {"code_length", rows.front().size()}});
  std::cout << "pooled " << rows.size() << " set(s) with " << o.method << "\n";
}

struct ClassifyOpts {
  std::string codes, manifest, out, model_out;
  double reg = 1e-4;
  std::size_t epochs = 50;
};

void run_classify(RunContext& ctx, const ClassifyOpts& o) {
  const auto codes = sfv::io::read_descriptors(o.codes);
  const auto entries = read_manifest(o.manifest);
  if (entries.size() != codes.size())
    throw sfv::DimensionError("codes file has " + std::to_string(codes.size()) + " rows but manifest lists " +
                              std::to_string(entries.size()) + " images");
  std::size_t classes = 0;
  std::vector<Eigen::Index> train_rows, test_rows;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    classes = std::max(classes, entries[i].label + 1);
    (entries[i].split == "train" ? train_rows : test_rows).push_back(static_cast<Eigen::Index>(i));
  }
  if (train_rows.empty()) throw sfv::InputError("manifest has no train rows");
  const auto take = [&](const std::vector<Eigen::Index>& idx) {
    sfv::Matrix m(static_cast<Eigen::Index>(idx.size()), codes.matrix().cols());
    for (std::size_t i = 0; i < idx.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = codes.matrix().row(idx[i]);
    return m;
  };
  std::vector<std::size_t> train_labels;
  for (auto r : train_rows) train_labels.push_back(entries[static_cast<std::size_t>(r)].label);
  sfv::SvmConfig cfg;
  cfg.reg = o.reg;
  cfg.epochs = o.epochs;
  cfg.seed = ctx.seed;
  const auto model = sfv::svm_train(sfv::LabeledCodes(take(train_rows), train_labels, classes), cfg);
  const auto pred = sfv::svm_predict(model, codes.matrix());

  sfv::io::CsvTable table({"index", "split", "label", "predicted"});
  std::vector<std::size_t> test_truth, test_pred, train_pred;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    table.add_row(sfv::io::CsvTable::Row().add(i).add(entries[i].split).add(entries[i].label).add(pred.labels[i]));
    if (entries[i].split == "train") {
      train_pred.push_back(pred.labels[i]);
    } else {
      test_truth.push_back(entries[i].label);
      test_pred.push_back(pred.labels[i]);
    }
  }
  sfv::io::write_csv(o.out, table);
  json summary{{"classes", classes}, {"train", train_rows.size()}, {"test", test_rows.size()},
               {"train_accuracy", sfv::accuracy(train_pred, train_labels)}};
  if (!test_truth.empty()) summary["test_accuracy"] = sfv::accuracy(test_pred, test_truth);
  write_sidecar(ctx, o.out, {{"results", summary}});
  if (!o.model_out.empty()) save_json_output(ctx, o.model_out, sfv::io::svm_to_json(model));
  std::cout << "train accuracy " << summary["train_accuracy"].get<double>();
  if (summary.contains("test_accuracy")) std::cout << ", test accuracy " << summary["test_accuracy"].get<double>();
  std::cout << "\n";
}

struct BenchOpts {
  std::vector<std::string> modes{"fv", "sfv"};
  std::vector<std::size_t> ms{64, 128, 256};
  std::size_t k = 5, d = 64, n = 3000, images = 1, reps = 5, warmup = 1;
  std::string out;
};

void run_bench(RunContext& ctx, const BenchOpts& o) {
  std::vector<sfv::EncoderKind> kinds;
  for (const auto& m : o.modes) kinds.push_back(sfv::parse_encoder_kind(m));
  if (o.reps < 3) throw UsageError("--reps must be >= 3");
  for (std::size_t m : o.ms) check_k(o.k, m);
  const bool both = std::count(kinds.begin(), kinds.end(), sfv::EncoderKind::kFv) &&
                    std::count(kinds.begin(), kinds.end(), sfv::EncoderKind::kSfv);
  sfv::BenchConfig cfg;
  cfg.repetitions = o.reps;
  cfg.warmup = o.warmup;
  cfg.threads = ctx.threads;

  sfv::io::CsvTable table({"mode", "M", "D", "k", "N", "images", "repetitions", "median_seconds", "iqr_seconds",
                           "predicted_ops", "predicted_ratio", "measured_ratio"});
  json per_m = json::array();
  for (std::size_t m : o.ms) {
    const auto gmm = sfv::synth::random_mixture(m, o.d, ctx.seed + m);
    sfv::Rng rng(ctx.seed ^ (m * 0x9E3779B97F4A7C15ull));
    std::vector<sfv::DescriptorSet> images;
    for (std::size_t i = 0; i < o.images; ++i) images.push_back(sfv::synth::sample_mixture(gmm, o.n, rng));
    std::map<sfv::EncoderKind, sfv::TimingRecord> records;
    double measured = std::numeric_limits<double>::quiet_NaN();
    if (both) {
      const auto rep = sfv::bench_compare(gmm, images, o.k, cfg);
      records[sfv::EncoderKind::kFv] = rep.fv;
      records[sfv::EncoderKind::kSfv] = rep.sfv;
      measured = rep.measured_ratio;
    }
    for (auto kind : kinds)
      if (!records.count(kind)) records[kind] = sfv::bench_encode(gmm, images, kind, o.k, cfg);
    const double predicted = sfv::predicted_speedup(m, o.d, o.k);
    for (auto kind : kinds) {
      const auto& r = records.at(kind);
      auto row = sfv::io::CsvTable::Row();
      row.add(sfv::to_string(kind)).add(m).add(o.d).add(o.k).add(o.n).add(o.images).add(o.reps);
      row.add(r.median_seconds).add(r.iqr_seconds).add(sfv::complexity_predict(m, o.d, o.k, kind).total());
      row.add(both ? sfv::io::format_number(predicted) : std::string());
      row.add(both ? sfv::io::format_number(measured) : std::string());
      table.add_row(std::move(row));
    }
    json entry{{"M", m}, {"predicted_ratio", predicted}};
    if (both) entry["measured_ratio"] = measured;
    per_m.push_back(entry);
    std::cout << "M=" << m << " predicted " << predicted;
    if (both) std::cout << " measured " << measured;
    std::cout << "\n";
  }
  sfv::io::write_csv(o.out, table);
  write_sidecar(ctx, o.out, {{"results", per_m}});
  const fs::path summary(o.out + ".summary.json");
  save_json_output(ctx, summary, {{"schema_version", sfv::io::kReportSchemaVersion}, {"ratios", per_m}});
}

struct SimilarityOpts {
  std::string gmm, in, out;
  std::size_t n = 200, k = 5, m = 256, d = 64;
};

void run_similarity(RunContext& ctx, const SimilarityOpts& o) {
  const auto gmm = o.gmm.empty() ? sfv::synth::random_mixture(o.m, o.d, ctx.seed) : sfv::io::load_gmm(o.gmm);
  check_k(o.k, gmm.components());
  if (o.n < 2) throw UsageError("--n must be >= 2");
  sfv::DescriptorSet sample = [&] {
    if (!o.in.empty()) return sfv::sample_descriptors(sfv::io::read_descriptors(o.in), o.n, ctx.seed);
    sfv::Rng rng(ctx.seed + 1);
    return sfv::synth::sample_mixture(gmm, o.n, rng);
  }();
  sfv::io::CsvTable pairs({"mode", "i", "j", "descriptor_cosine", "code_cosine"});
  json summary{{"schema_version", sfv::io::kReportSchemaVersion}, {"n", sample.size()}, {"k", o.k}};
  for (auto kind : {sfv::EncoderKind::kFv, sfv::EncoderKind::kSfv}) {
    const auto rep = sfv::similarity_correspondence(gmm, sample, kind, o.k);
    for (const auto& p : rep.pairs)
      pairs.add_row(sfv::io::CsvTable::Row()
                        .add(sfv::to_string(kind))
                        .add(p.first)
                        .add(p.second)
                        .add(p.descriptor_cosine)
                        .add(p.code_cosine));
    const std::string key(sfv::to_string(kind));
    summary["pearson_" + key] = rep.pearson ? json(*rep.pearson) : json(nullptr);
    summary["excluded_pairs_" + key] = rep.excluded_pairs;
    std::cout << key << ": r = " << (rep.pearson ? std::to_string(*rep.pearson) : "undefined") << "\n";
  }
  sfv::io::write_csv(o.out, pairs);
  write_sidecar(ctx, o.out, {{"results", summary}});
  save_json_output(ctx, fs::path(o.out + ".summary.json"), summary);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher vector / sparse Fisher vector toolkit"};
  app.set_version_flag("--version", SFV_VERSION);
  app.require_subcommand(1);

  RunContext ctx;
  for (int i = 0; i < argc; ++i) ctx.argv.emplace_back(argv[i]);
  ctx.threads = sfv::default_thread_count();

  const auto common = [&](CLI::App* s) {
    s->add_option("--seed", ctx.seed, "random seed")->capture_default_str();
    s->add_option("--threads", ctx.threads, "worker threads (default: SFV_NUM_THREADS or 1)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };
  const auto input = [](CLI::App* s, std::vector<std::string>& in, std::string& manifest) {
    s->add_option("--in", in, "descriptor file(s)")->check(CLI::ExistingFile);
    s->add_option("--manifest", manifest, "manifest CSV (path,label,split)")->check(CLI::ExistingFile);
  };
  const std::vector<std::string> encoder_names{"fv", "sfv", "bow"};

  SynthOpts synth;
  auto* s_synth = app.add_subcommand("synth", "generate a seeded synthetic descriptor dataset");
  common(s_synth);
  s_synth->add_option("--task", synth.task, "blobs | variance-pair")
      ->capture_default_str()
      ->check(CLI::IsMember({"blobs", "variance-pair"}));
  s_synth->add_option("--out", synth.out, "output directory")->required();
  s_synth->add_option("--classes", synth.classes, "classes (blobs only)")->capture_default_str();
  s_synth->add_option("--train", synth.train, "train images per class (0: task default)")->capture_default_str();
  s_synth->add_option("--test", synth.test, "test images per class (0: task default)")->capture_default_str();
  s_synth->add_option("--descriptors", synth.descriptors, "descriptors per image (0: task default)")
      ->capture_default_str();
  s_synth->add_option("--dim", synth.dim, "descriptor dimension (0: task default)")->capture_default_str();

  TrainGmmOpts tg;
  auto* s_tg = app.add_subcommand("train-gmm", "fit a diagonal Gaussian mixture by EM");
  common(s_tg);
  input(s_tg, tg.in, tg.manifest);
  s_tg->add_option("--M", tg.m, "mixture components")->capture_default_str();
  s_tg->add_option("--max-iter", tg.max_iter, "EM iteration cap")->capture_default_str();
  s_tg->add_option("--tol", tg.tol, "convergence tolerance on mean log-likelihood")->capture_default_str();
  s_tg->add_option("--per-image", tg.per_image, "descriptors taken per image (0: all)")->capture_default_str();
  s_tg->add_option("--pca", tg.pca, "PCA model applied before fitting")->check(CLI::ExistingFile);
  s_tg->add_option("--codebook-out", tg.codebook_out, "also fit a k-means codebook with M centroids");
  s_tg->add_option("--out", tg.out, "output model JSON")->required();

  TrainPcaOpts tp;
  auto* s_tp = app.add_subcommand("train-pca", "fit a PCA projection");
  common(s_tp);
  input(s_tp, tp.in, tp.manifest);
  s_tp->add_option("--dim", tp.dim, "output dimension")->capture_default_str();
  s_tp->add_option("--per-image", tp.per_image, "descriptors taken per image (0: all)")->capture_default_str();
  s_tp->add_option("--out", tp.out, "output model JSON")->required();

  EncodeOpts enc;
  auto* s_enc = app.add_subcommand("encode", "encode descriptor sets as FV, SFV or BOW codes");
  common(s_enc);
  input(s_enc, enc.in, enc.manifest);
  s_enc->add_option("--mode", enc.mode, "fv | sfv | bow")->capture_default_str()->check(CLI::IsMember(encoder_names));
  s_enc->add_option("--k", enc.k, "components kept per descriptor (sfv)")->capture_default_str();
  s_enc->add_option("--gmm", enc.gmm, "mixture model JSON")->check(CLI::ExistingFile);
  s_enc->add_option("--codebook", enc.codebook, "k-means codebook JSON (bow)")->check(CLI::ExistingFile);
  s_enc->add_option("--pca", enc.pca, "PCA model applied before encoding")->check(CLI::ExistingFile);
  s_enc->add_flag("--no-normalize", enc.no_normalize, "skip power and L2 normalization");
  s_enc->add_option("--out", enc.out, "output code file (one row per input set)")->required();

  PoolOpts pool;
  auto* s_pool = app.add_subcommand("pool", "pool per-descriptor codes with per-component weights");
  common(s_pool);
  input(s_pool, pool.in, pool.manifest);
  s_pool->add_option("--method", pool.method, "gmp | sfv | sfv-limit")
      ->capture_default_str()
      ->check(CLI::IsMember({"gmp", "sfv", "sfv-limit"}));
  s_pool->add_option("--lambda", pool.lambda, "regularization")->capture_default_str();
  s_pool->add_option("--k", pool.k, "components kept per descriptor")->capture_default_str();
  s_pool->add_option("--gmm", pool.gmm, "mixture model JSON")->required()->check(CLI::ExistingFile);
  s_pool->add_option("--pca", pool.pca, "PCA model applied before encoding")->check(CLI::ExistingFile);
  s_pool->add_flag("--no-normalize", pool.no_normalize, "skip power and L2 normalization");
  s_pool->add_option("--out", pool.out, "output code file")->required();

  ClassifyOpts cls;
  auto* s_cls = app.add_subcommand("classify", "train a one-vs-rest linear SVM and predict");
  common(s_cls);
  s_cls->add_option("--codes", cls.codes, "code file, one row per manifest entry")
      ->required()
      ->check(CLI::ExistingFile);
  s_cls->add_option("--manifest", cls.manifest, "manifest CSV (path,label,split)")
      ->required()
      ->check(CLI::ExistingFile);
  s_cls->add_option("--reg", cls.reg, "regularization strength")->capture_default_str()->check(CLI::PositiveNumber);
  s_cls->add_option("--epochs", cls.epochs, "SGD epochs")->capture_default_str()->check(CLI::PositiveNumber);
  s_cls->add_option("--model-out", cls.model_out, "write the trained model JSON");
  s_cls->add_option("--out", cls.out, "predictions CSV")->required();

  BenchOpts bench;
  auto* s_bench = app.add_subcommand("bench", "time encoders on synthetic data");
  common(s_bench);
  s_bench->add_option("--modes", bench.modes, "comma-separated encoders")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember(encoder_names));
  s_bench->add_option("--M", bench.ms, "comma-separated component counts")->delimiter(',')->capture_default_str();
  s_bench->add_option("--k", bench.k, "components kept per descriptor")->capture_default_str();
  s_bench->add_option("--D", bench.d, "descriptor dimension")->capture_default_str();
  s_bench->add_option("--N", bench.n, "descriptors per image")->capture_default_str();
  s_bench->add_option("--images", bench.images, "images per measurement")->capture_default_str();
  s_bench->add_option("--reps", bench.reps, "measured repetitions")->capture_default_str();
  s_bench->add_option("--warmup", bench.warmup, "discarded warmup runs")->capture_default_str();
  s_bench->add_option("--out", bench.out, "timing CSV")->required();

  SimilarityOpts sim;
  auto* s_sim = app.add_subcommand("similarity", "descriptor vs code cosine similarity correspondence");
  common(s_sim);
  s_sim->add_option("--gmm", sim.gmm, "mixture model JSON (default: random synthetic mixture)")
      ->check(CLI::ExistingFile);
  s_sim->add_option("--in", sim.in, "descriptor file to sample from (default: draws from the mixture)")
      ->check(CLI::ExistingFile);
  s_sim->add_option("--n", sim.n, "descriptors sampled")->capture_default_str();
  s_sim->add_option("--k", sim.k, "components kept per descriptor (sfv)")->capture_default_str();
  s_sim->add_option("--M", sim.m, "components of the synthetic mixture")->capture_default_str();
  s_sim->add_option("--D", sim.d, "dimension of the synthetic mixture")->capture_default_str();
  s_sim->add_option("--out", sim.out, "pairs CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {  // --help, --version
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ctx.sub = app.get_subcommands().front();
    ctx.command = ctx.sub->get_name();
    if (ctx.command == "synth") run_synth(ctx, synth);
    else if (ctx.command == "train-gmm") run_train_gmm(ctx, tg);
    else if (ctx.command == "train-pca") run_train_pca(ctx, tp);
    else if (ctx.command == "encode") run_encode(ctx, enc);
    else if (ctx.command == "pool") run_pool(ctx, pool);
    else if (ctx.command == "classify") run_classify(ctx, cls);
    else if (ctx.command == "bench") run_bench(ctx, bench);
    else if (ctx.command == "similarity") run_similarity(ctx, sim);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error (" << ctx.command << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
