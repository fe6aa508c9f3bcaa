// setsim: similarity testing of random sets observed as binary images.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "setsim/setsim.hpp"

namespace fs = std::filesystem;
using namespace setsim;

namespace {

enum Exit { Ok = 0, Failure = 1, Usage = 2, Io = 3, Insufficient = 4 };

struct Options {
  // analysis
  int radius = 5;
  int bins = 10;
  int depth = 2;
  std::size_t permutations = 999;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  int connectivity = 8;
  std::size_t min_pixels = 1;
  bool discard_border = false;
  bool invert = false;
  int threshold = 127;
  std::string restrict_to = "component";
  unsigned threads = 0;
  std::string out = ".";
  // models
  int width = 400;
  int height = 400;
  double intensity = BooleanParams{}.intensity;
  double r_min = BooleanParams{}.radius.min;
  double r_max = BooleanParams{}.radius.max;
  double p_delete = 0.5;
  int fixed_side = 4;
  double count_mean = 60.0;
  std::string ratio_law;
  std::size_t reference = 100;
  std::string format = "pbm";
};

AnalysisConfig analysis_config(const Options& o) {
  AnalysisConfig cfg;
  cfg.labeling.connectivity = connectivity_from_int(o.connectivity);
  cfg.labeling.min_pixels = o.min_pixels;
  cfg.labeling.discard_border = o.discard_border;
  cfg.descriptors.radius = o.radius;
  cfg.descriptors.bins = o.bins;
  cfg.descriptors.scope = o.restrict_to == "image" ? OccupancyScope::Image : OccupancyScope::Component;
  cfg.permutation.permutations = o.permutations;
  cfg.permutation.seed = o.seed;
  cfg.permutation.depth = o.depth;
  cfg.permutation.workers = o.threads;
  return cfg;
}

EmpiricalLaw load_ratio_law(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return EmpiricalLaw(read_numeric_column(std::string(bytes.begin(), bytes.end()), "ratio"));
}

ModelSettings model_settings(const Options& o) {
  ModelSettings s;
  s.window = {o.width, o.height};
  s.boolean.intensity = o.intensity;
  s.boolean.radius = RadiusLaw::uniform(o.r_min, o.r_max);
  s.ellipse.intensity = o.intensity;
  s.p_delete = o.p_delete;
  s.fixed_side = o.fixed_side;
  s.reference_realisations = o.reference;
  if (!o.ratio_law.empty()) {
    s.ratio_law = load_ratio_law(o.ratio_law);
    s.count_law = CountLaw::poisson(o.count_mean);
  }
  return s;
}

ModelKind require_model(const std::string& name) {
  const auto kind = parse_model(name);
  if (!kind)
    throw InvalidArgument("unknown model '" + name + "' (expected boolean, reduced-boolean, squares, rectangles or ellipses)");
  return *kind;
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void echo_config(const CLI::App& app, const fs::path& dir) {
  write_text(dir / "effective_config.txt", app.config_to_str(true, false));
}

std::vector<ShapeDescriptor> describe_file(const std::string& path, const Options& o, const AnalysisConfig& cfg) {
  const auto img = load_image_file(path, o.threshold, o.invert);
  return describe_image(img, cfg.labeling, cfg.descriptors);
}

std::string histogram_svg(std::span<const double> values, int bins) {
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) ++counts[static_cast<std::size_t>(occupancy_bin(std::clamp(v, 0.0, 1.0), bins))];
  const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
  const int w = 400, h = 200, bar = w / bins;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
                    std::to_string(h + 20) + "\">\n";
  for (int i = 0; i < bins; ++i) {
    const int bh = counts[static_cast<std::size_t>(i)] * h / peak;
    svg += "<rect x=\"" + std::to_string(i * bar) + "\" y=\"" + std::to_string(h - bh) + "\" width=\"" +
           std::to_string(bar - 1) + "\" height=\"" + std::to_string(bh) + "\" fill=\"#4a6fa5\"/>\n";
  }
  svg += "<text x=\"0\" y=\"" + std::to_string(h + 15) + "\" font-size=\"12\">0</text>\n";
  svg += "<text x=\"" + std::to_string(w - 10) + "\" y=\"" + std::to_string(h + 15) + "\" font-size=\"12\">1</text>\n";
  svg += "</svg>\n";
  return svg;
}

int run_simulate(const CLI::App& app, const Options& o, const std::string& model, std::size_t n) {
  const auto kind = require_model(model);
  if (needs_ratio_law(kind) && o.ratio_law.empty())
    throw InvalidArgument(model + " model needs a ratio law: pass --ratio-law FILE");
  const auto settings = model_settings(o);
  const auto format = o.format == "png" ? ImageFormat::Png : ImageFormat::Pbm;
  const auto dir = prepare_out(o.out);

  std::vector<BinaryImage> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) images.push_back(BinaryImage(1, 1));
  parallel_for(n, o.threads, [&](std::size_t i) {
    images[i] = simulate_model(kind, settings, derive_seed(o.seed, Stream::Realisation, i));
  });
  for (std::size_t i = 0; i < n; ++i) {
    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_%04zu", model.c_str(), i);
    save_image(dir / (std::string(stem) + (format == ImageFormat::Png ? ".png" : ".pbm")), images[i], format);
    std::string side = "model = " + model + "\nindex = " + std::to_string(i) +
                       "\nmaster_seed = " + std::to_string(o.seed) +
                       "\nrealisation_seed = " + std::to_string(derive_seed(o.seed, Stream::Realisation, i)) +
                       "\nwidth = " + std::to_string(o.width) + "\nheight = " + std::to_string(o.height) +
                       "\nintensity = " + format_real(o.intensity) + "\nr_min = " + format_real(o.r_min) +
                       "\nr_max = " + format_real(o.r_max) + "\n";
    if (kind == ModelKind::ReducedBoolean) side += "p_delete = " + format_real(o.p_delete) + "\n";
    if (needs_ratio_law(kind))
      side += "ratio_law = " + o.ratio_law + "\ncount_mean = " + format_real(o.count_mean) + "\n";
    if (kind == ModelKind::Rectangles) side += "fixed_side = " + std::to_string(o.fixed_side) + "\n";
    write_text(dir / (std::string(stem) + ".txt"), side);
  }
  echo_config(app, dir);
  return Ok;
}

int run_describe(const CLI::App& app, const Options& o, const std::vector<std::string>& files) {
  const auto cfg = analysis_config(o);
  const auto dir = prepare_out(o.out);
  std::vector<std::string> tables;
  for (const auto& f : files) {
    const auto ds = describe_file(f, o, cfg);
    if (ds.empty()) std::cerr << "warning: " << f << ": no components after filtering\n";
    tables.push_back(descriptors_csv(ds, o.bins));
  }
  for (std::size_t i = 0; i < files.size(); ++i)
    write_text(dir / (fs::path(files[i]).stem().string() + ".descriptors.csv"), tables[i]);
  echo_config(app, dir);
  return Ok;
}

std::vector<ShapeDescriptor> pooled_side(const std::vector<std::string>& files, const Options& o,
                                         const AnalysisConfig& cfg) {
  std::vector<ShapeDescriptor> pool;
  for (const auto& f : files) {
    auto ds = describe_file(f, o, cfg);
    pool.insert(pool.end(), ds.begin(), ds.end());
  }
  return pool;
}

int run_test(const CLI::App& app, const Options& o, const std::vector<std::string>& a,
             const std::vector<std::string>& b) {
  const auto cfg = analysis_config(o);
  const auto dir = prepare_out(o.out);
  auto pa = pooled_side(a, o, cfg);
  auto pb = pooled_side(b, o, cfg);
  if (pa.empty() || pb.empty()) throw InsufficientData("a side has no components after filtering");
  if (o.k > 0) {
    pa = sample_without_replacement(std::span<const ShapeDescriptor>(pa), o.k, derive_seed(o.seed, Stream::SampleX));
    pb = sample_without_replacement(std::span<const ShapeDescriptor>(pb), o.k, derive_seed(o.seed, Stream::SampleY));
  }
  PermutationConfig perm = cfg.permutation;
  perm.seed = derive_seed(o.seed, Stream::Pair);
  const auto out = joint_similarity_test(pa, pb, perm);
  std::printf("components: %zu vs %zu\n", pa.size(), pb.size());
  std::printf("N_ratio = %s\nN_curve = %s\np_ratio = %s\np_curve = %s\np_joint = %s\n", format_real(out.n_ratio_obs).c_str(),
              format_real(out.n_curve_obs).c_str(), format_real(out.p_ratio).c_str(), format_real(out.p_curve).c_str(),
              format_real(out.p_joint).c_str());
  write_text(dir / "test.csv", outcome_header() + "\n" + outcome_row(out) + "\n");
  echo_config(app, dir);
  return Ok;
}

int run_experiment(const CLI::App& app, const Options& o, const std::string& model_a, const std::string& model_b,
                   std::size_t pairs, bool bootstrap, std::size_t repeats, std::size_t realisations, bool svg) {
  const auto a = require_model(model_a);
  const auto b = require_model(model_b);
  const auto cfg = analysis_config(o);
  auto settings = model_settings(o);
  const auto dir = prepare_out(o.out);
  if (needs_ratio_law(a) || needs_ratio_law(b))
    ensure_reference_laws(settings, cfg.labeling, derive_seed(o.seed, Stream::Reference), o.threads);

  std::vector<TestOutcome> outcomes;
  if (bootstrap) {
    outcomes = bootstrap_experiment(a, b, settings, realisations, o.k > 0 ? o.k : 100, repeats, cfg);
  } else {
    outcomes = paired_experiment(a, b, settings, pairs, o.k > 0 ? o.k : 10, cfg);
  }
  write_text(dir / "pvalues.csv", pvalues_csv(outcomes));
  std::string full = outcome_header() + "\n";
  for (const auto& t : outcomes) full += outcome_row(t) + "\n";
  write_text(dir / "outcomes.csv", full);
  if (svg) {
    std::vector<double> p;
    for (const auto& t : outcomes) p.push_back(t.p_joint);
    write_text(dir / "pvalues_hist.svg", histogram_svg(p, 20));
  }
  std::size_t below = 0;
  for (const auto& t : outcomes) below += t.p_joint < 0.05;
  std::printf("%s vs %s: %zu tests, %zu with p_joint < 0.05\n", model_a.c_str(), model_b.c_str(), outcomes.size(),
              below);
  echo_config(app, dir);
  return Ok;
}

int run_matrix(const CLI::App& app, const Options& o, const std::string& image_dir, std::size_t repeats) {
  if (!fs::is_directory(image_dir)) throw IoError("not a directory: " + image_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(image_dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pbm" || ext == ".png")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw InsufficientData("matrix needs at least 2 images in " + image_dir);

  const auto cfg = analysis_config(o);
  const auto dir = prepare_out(o.out);
  std::vector<std::vector<ShapeDescriptor>> images;
  std::vector<std::string> labels;
  for (const auto& f : files) {
    images.push_back(describe_file(f.string(), o, cfg));
    labels.push_back(f.filename().string());
  }
  const auto m = pairwise_matrix(images, o.k > 0 ? o.k : 20, repeats, cfg.permutation);
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
  write_text(dir / "matrix_mean_p.csv", matrix_mean_p_csv(m, labels));
  write_text(dir / "matrix_count_below_05.csv", matrix_count_csv(m, labels));
  echo_config(app, dir);
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity testing of random sets observed as binary images"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a key = value file; command-line flags win");
  app.get_config_ptr()->check(CLI::ExistingFile);

  Options o;
  app.add_option("--radius", o.radius, "Disc radius r in pixels")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--bins", o.bins, "Histogram bins l of the testing function")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  app.add_option("--depth", o.depth, "Depth D of the subset kernel")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--permutations", o.permutations, "Permutation rounds s")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--k", o.k, "Components sampled per side (0: all for test, 10 paired, 100 bootstrap, 20 matrix)")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Master seed")->envname("SETSIM_SEED")->capture_default_str();
  app.add_option("--connectivity", o.connectivity, "Foreground connectivity")
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();
  app.add_option("--min-pixels", o.min_pixels, "Drop components with fewer pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--discard-border", o.discard_border, "Drop components touching the image border");
  app.add_flag("--invert", o.invert, "Treat dark pixels as foreground");
  app.add_option("--threshold", o.threshold, "Gray level above which a PNG pixel is foreground")
      ->check(CLI::Range(0, 255))
      ->capture_default_str();
  app.add_option("--restrict", o.restrict_to, "Pixels filling the disc: the component's own or the whole image's")
      ->check(CLI::IsMember({"component", "image"}))
      ->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0: all cores); output does not depend on it")
      ->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--width", o.width, "Window width")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--height", o.height, "Window height")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--intensity", o.intensity, "Germs per square pixel (Boolean and ellipse models)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--rmin", o.r_min, "Smallest disc radius")->capture_default_str();
  app.add_option("--rmax", o.r_max, "Largest disc radius")->capture_default_str();
  app.add_option("--p-delete", o.p_delete, "Component deletion probability (reduced Boolean)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--fixed-side", o.fixed_side, "Fixed rectangle side")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--count-mean", o.count_mean, "Mean number of squares/rectangles with --ratio-law")
      ->capture_default_str();
  app.add_option("--ratio-law", o.ratio_law, "CSV of perimeter/area ratios (a 'ratio' column or a single column)");
  app.add_option("--reference", o.reference, "Boolean realisations behind the default ratio law")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string model;
  std::size_t n = 1;
  auto* simulate = app.add_subcommand("simulate", "Write seeded model realisations");
  simulate->add_option("model", model, "boolean, reduced-boolean, squares, rectangles or ellipses")->required();
  simulate->add_option("--n", n, "Number of realisations")->capture_default_str();
  simulate->add_option("--format", o.format, "Image format")->check(CLI::IsMember({"pbm", "png"}))->capture_default_str();

  std::vector<std::string> images;
  auto* describe = app.add_subcommand("describe", "Write one descriptor CSV per image");
  describe->add_option("images", images, "PBM or PNG files")->required();

  std::vector<std::string> side_a, side_b;
  auto* test = app.add_subcommand("test", "Joint similarity test of two sets of images");
  test->add_option("-a,--a", side_a, "Images of the first random set")->required();
  test->add_option("-b,--b", side_b, "Images of the second random set")->required();

  std::string model_a, model_b;
  std::size_t pairs = 100, repeats = 100, realisations = 100;
  bool bootstrap = false, svg = false;
  auto* experiment = app.add_subcommand("experiment", "Repeated tests between two models; writes pvalues.csv");
  experiment->add_option("model_a", model_a, "First model")->required();
  experiment->add_option("model_b", model_b, "Second model")->required();
  experiment->add_option("--pairs", pairs, "Realisation pairs (paired mode)")->capture_default_str();
  experiment->add_flag("--bootstrap", bootstrap, "Pool components of many realisations and resample");
  experiment->add_option("--repeats", repeats, "Bootstrap repeats")->check(CLI::PositiveNumber)->capture_default_str();
  experiment->add_option("--realisations", realisations, "Realisations pooled per model (bootstrap mode)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  experiment->add_flag("--svg", svg, "Also draw a p-value histogram");

  std::string image_dir;
  std::size_t matrix_repeats = 100;
  auto* matrix = app.add_subcommand("matrix", "Pairwise tests between all images of a directory");
  matrix->add_option("dir", image_dir, "Directory of PBM/PNG images")->required();
  matrix->add_option("--repeats", matrix_repeats, "Tests per pair")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Io;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Usage;
  }

  try {
    if (o.r_min < 1.0 || o.r_max < o.r_min) throw InvalidArgument("need 1 <= --rmin <= --rmax");
    if (o.depth > o.bins) throw InvalidArgument("--depth must not exceed --bins");
    if (*simulate) return run_simulate(app, o, model, n);
    if (*describe) return run_describe(app, o, images);
    if (*test) return run_test(app, o, side_a, side_b);
    if (*experiment) return run_experiment(app, o, model_a, model_b, pairs, bootstrap, repeats, realisations, svg);
    if (*matrix) return run_matrix(app, o, image_dir, matrix_repeats);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Usage;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Insufficient;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Io;
  } catch (const DecodeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Io;
  } catch (const UnsupportedFormat& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Failure;
  }
  return Usage;
}
