#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "setsim/image.hpp"
#include "setsim/image_io.hpp"

namespace fs = std::filesystem;
using namespace setsim;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("setsim_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args, const std::string& env = "") {
  const auto out = scratch() / "stdout.txt";
  const auto err = scratch() / "stderr.txt";
  const std::string cmd =
      env + " " + SETSIM_CLI_PATH + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path two_blobs_image() {
  const auto path = scratch() / "blobs.pbm";
  BinaryImage img(60, 40);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) img.set(x, y);
  for (int y = 20; y < 35; ++y)
    for (int x = 30; x < 50; ++x)
      if ((x - 40) * (x - 40) + (y - 27) * (y - 27) <= 49) img.set(x, y);
  save_image(path, img, ImageFormat::Pbm);
  return path;
}

fs::path boolean_images(const std::string& name, std::size_t n, int seed) {
  const auto dir = scratch() / name;
  const auto r = run("simulate boolean --n " + std::to_string(n) + " --seed " + std::to_string(seed) + " --out " +
                     dir.string());
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_CASE("simulate") {
  const auto a = scratch() / "sim_a";
  const auto b = scratch() / "sim_b";
  REQUIRE(run("simulate boolean --n 5 --seed 7 --out " + a.string()).code == 0);
  REQUIRE(run("simulate boolean --n 5 --seed 7 --threads 3 --out " + b.string()).code == 0);
  const auto fa = files_with(a, ".pbm");
  const auto fb = files_with(b, ".pbm");
  REQUIRE(fa.size() == 5);
  REQUIRE(fb.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(slurp(fa[i]) == slurp(fb[i]));
  CHECK(files_with(a, ".txt").size() == 6);
  CHECK(fs::exists(a / "effective_config.txt"));
  CHECK(slurp(a / "boolean_0000.txt").find("master_seed = 7") != std::string::npos);

  const auto zero = scratch() / "sim_zero";
  CHECK(run("simulate boolean --n 0 --out " + zero.string()).code == 0);
  CHECK(files_with(zero, ".pbm").empty());

  const auto sq = run("simulate squares --n 2 --out " + (scratch() / "sim_sq").string());
  CHECK(sq.code == 2);
  CHECK(sq.err.find("ratio-law") != std::string::npos);

  CHECK(run("simulate quermass --out " + (scratch() / "sim_q").string()).code == 2);

  std::ofstream(scratch() / "not_a_dir") << "x";
  CHECK(run("simulate boolean --n 1 --out " + (scratch() / "not_a_dir" / "sub").string()).code == 3);
}

TEST_CASE("simulate squares from a ratio law and png output") {
  const auto law = scratch() / "law.csv";
  std::ofstream(law) << "ratio\n0.5\n0.3\n0.25\n";
  const auto dir = scratch() / "sim_squares";
  CHECK(run("simulate squares --n 2 --format png --ratio-law " + law.string() + " --out " + dir.string()).code == 0);
  const auto pngs = files_with(dir, ".png");
  REQUIRE(pngs.size() == 2);
  CHECK(load_image_file(pngs[0]).foreground_count() > 0);
  CHECK(run("simulate rectangles --n 1 --ratio-law " + (scratch() / "missing.csv").string() + " --out " + dir.string())
            .code == 3);
}

TEST_CASE("describe") {
  const auto img = two_blobs_image();
  const auto dir = scratch() / "desc";
  REQUIRE(run("describe " + img.string() + " --radius 5 --bins 10 --out " + dir.string()).code == 0);
  const auto csv = slurp(dir / "blobs.descriptors.csv");
  CHECK(csv.rfind("component_id,ratio,t_1,t_2,t_3,t_4,t_5,t_6,t_7,t_8,t_9,t_10,n_boundary\n", 0) == 0);
  CHECK(count_lines(csv) == 3);
  const auto echo = slurp(dir / "effective_config.txt");
  CHECK(echo.find("radius=5") != std::string::npos);
  CHECK(echo.find("bins=10") != std::string::npos);

  const auto again = scratch() / "desc2";
  REQUIRE(run("describe " + img.string() + " --out " + again.string()).code == 0);
  CHECK(slurp(again / "blobs.descriptors.csv") == csv);

  const auto filtered = run("describe " + img.string() + " --min-pixels 1000 --out " + (scratch() / "desc3").string());
  CHECK(filtered.code == 0);
  CHECK(filtered.err.find("warning") != std::string::npos);
  CHECK(count_lines(slurp(scratch() / "desc3" / "blobs.descriptors.csv")) == 1);

  const auto missing = run("describe " + (scratch() / "nope.pbm").string() + " --out " + dir.string());
  CHECK(missing.code == 3);
  CHECK(missing.err.find("nope.pbm") != std::string::npos);

  std::ofstream(scratch() / "broken.pbm") << "P1\n3 3\n1 1 z";
  CHECK(run("describe " + (scratch() / "broken.pbm").string() + " --out " + dir.string()).code == 3);
}

TEST_CASE("config file, flags and environment") {
  const auto img = two_blobs_image();
  const auto cfg = scratch() / "run.cfg";
  std::ofstream(cfg) << "# analysis settings\nradius = 3\nbins = 8\n";
  const auto dir = scratch() / "cfg";
  REQUIRE(run("describe " + img.string() + " --config " + cfg.string() + " --bins 12 --out " + dir.string()).code == 0);
  const auto echo = slurp(dir / "effective_config.txt");
  CHECK(echo.find("radius=3") != std::string::npos);
  CHECK(echo.find("bins=12") != std::string::npos);

  const auto env_dir = scratch() / "env";
  REQUIRE(run("describe " + img.string() + " --out " + env_dir.string(), "SETSIM_SEED=99").code == 0);
  CHECK(slurp(env_dir / "effective_config.txt").find("seed=99") != std::string::npos);
  REQUIRE(run("describe " + img.string() + " --seed 5 --out " + env_dir.string(), "SETSIM_SEED=99").code == 0);
  CHECK(slurp(env_dir / "effective_config.txt").find("seed=5") != std::string::npos);

  CHECK(run("describe " + img.string() + " --radius 0").code == 2);
  CHECK(run("describe " + img.string() + " --restrict sideways").code == 2);
  CHECK(run("describe " + img.string() + " --no-such-flag").code == 2);
  CHECK(run("describe " + img.string() + " --config " + (scratch() / "absent.cfg").string()).code == 2);
  CHECK(run("").code == 2);
}

TEST_CASE("test") {
  const auto dir = boolean_images("test_imgs", 2, 3);
  const auto imgs = files_with(dir, ".pbm");
  const auto out = scratch() / "test_out";
  const std::string args = "test -a " + imgs[0].string() + " -b " + imgs[1].string() +
                           " --k 10 --permutations 199 --seed 4 --out " + out.string();
  const auto first = run(args);
  REQUIRE(first.code == 0);
  CHECK(first.out.find("p_joint = ") != std::string::npos);
  CHECK(first.out.find("components: 10 vs 10") != std::string::npos);
  const auto csv = slurp(out / "test.csv");
  CHECK(count_lines(csv) == 2);
  CHECK(run(args).out == first.out);
  CHECK(slurp(out / "test.csv") == csv);

  const auto tiny = scratch() / "tiny.pbm";
  BinaryImage one(10, 10);
  one.set(4, 4);
  save_image(tiny, one, ImageFormat::Pbm);
  CHECK(run("test -a " + tiny.string() + " -b " + imgs[1].string() + " --out " + out.string()).code == 4);
}

TEST_CASE("experiment") {
  const auto out = scratch() / "exp";
  const auto r = run("experiment boolean reduced-boolean --pairs 6 --permutations 99 --width 200 --height 200 --svg --out " +
                     out.string());
  REQUIRE(r.code == 0);
  const auto p = slurp(out / "pvalues.csv");
  CHECK(p.rfind("p_joint,p_ratio,p_curve\n", 0) == 0);
  CHECK(count_lines(p) == 7);
  CHECK(count_lines(slurp(out / "outcomes.csv")) == 7);
  CHECK(fs::exists(out / "pvalues_hist.svg"));

  const auto boot = scratch() / "exp_boot";
  REQUIRE(run("experiment boolean squares --bootstrap --k 20 --repeats 4 --realisations 3 --reference 3 "
              "--permutations 99 --width 200 --height 200 --out " + boot.string())
              .code == 0);
  CHECK(count_lines(slurp(boot / "pvalues.csv")) == 5);

  CHECK(run("experiment boolean blobs --out " + out.string()).code == 2);
  CHECK(run("experiment boolean boolean --pairs 2 --width 20 --height 20 --rmin 1 --rmax 2 --intensity 0.00001 --out " +
            out.string())
            .code == 4);
}

TEST_CASE("matrix") {
  const auto dir = boolean_images("matrix_imgs", 2, 8);
  const auto out = scratch() / "matrix_out";
  REQUIRE(run("matrix " + dir.string() + " --k 8 --repeats 5 --permutations 49 --out " + out.string()).code == 0);
  const auto mean = slurp(out / "matrix_mean_p.csv");
  const auto count = slurp(out / "matrix_count_below_05.csv");
  CHECK(count_lines(mean) == 3);
  CHECK(mean.find(",boolean_0000.pbm,boolean_0001.pbm\n") == 0);
  std::istringstream rows(count);
  std::string line;
  std::getline(rows, line);
  std::size_t cells = 0;
  while (std::getline(rows, line)) {
    std::stringstream cells_in(line);
    std::string cell;
    std::getline(cells_in, cell, ',');
    while (std::getline(cells_in, cell, ',')) {
      if (cell.empty()) continue;
      ++cells;
      CHECK(std::stoi(cell) >= 0);
      CHECK(std::stoi(cell) <= 5);
    }
  }
  CHECK(cells == 3);

  const auto lonely = scratch() / "lonely";
  fs::create_directories(lonely);
  fs::copy_file(files_with(dir, ".pbm")[0], lonely / "only.pbm", fs::copy_options::overwrite_existing);
  CHECK(run("matrix " + lonely.string() + " --out " + out.string()).code == 4);
}
