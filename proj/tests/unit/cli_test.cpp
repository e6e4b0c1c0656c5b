#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace selrcn {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

class CliData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "selrcn_unit_cli";
    fs::remove_all(root_);
    const Result r = run_cli({"synth-gen", "--out", root_.string(), "--samples", "8", "--seed", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    manifest_ = (root_ / "manifest.csv").string();
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static inline fs::path root_;
  static inline std::string manifest_;
};

TEST(Cli, TrainWithoutManifestIsAUsageError) {
  const Result r = run_cli({"train"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--manifest"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownFlagIsAUsageError) {
  EXPECT_EQ(run_cli({"gradcheck", "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({}).code, 1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli({"--help"}).code, 0); }

TEST(Cli, GradcheckReportsErrorAndPasses) {
  const Result r = run_cli({"gradcheck", "--preset", "tiny", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("max relative error: "), std::string::npos);
}

TEST_F(CliData, SynthGenWritesManifest) {
  std::ifstream in(manifest_);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "video_dir,label_index,frame_count");
}

TEST_F(CliData, AblateOverSEAxisWritesFourRows) {
  const Result r = run_cli({"ablate", "--manifest", manifest_, "--eval-manifest", manifest_, "--axes", "se",
                            "--epochs", "1", "--hidden", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 5u) << r.out;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "se_spatial,se_temporal,layers,hidden,eval_acc");
}

TEST_F(CliData, TrainEvalAndFeaturesRoundTrip) {
  const std::string checkpoint = (root_ / "model.selr").string();
  const Result t = run_cli({"train", "--manifest", manifest_, "--eval-manifest", manifest_, "--epochs", "2",
                            "--hidden", "8", "--checkpoint", checkpoint});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(count_lines(t.out), 3u) << t.out;

  const Result e = run_cli({"eval", "--manifest", manifest_, "--checkpoint", checkpoint});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(count_lines(e.out), 6u) << e.out;

  const Result f = run_cli({"features", "--manifest", manifest_, "--checkpoint", checkpoint});
  ASSERT_EQ(f.code, 0) << f.err;
  EXPECT_EQ(count_lines(f.out), 10u);
  const std::string first = f.out.substr(0, f.out.find('\n'));
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 63);

  const Result resumed = run_cli({"train", "--manifest", manifest_, "--resume", checkpoint, "--epochs", "3"});
  ASSERT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_EQ(count_lines(resumed.out), 4u) << resumed.out;

  const Result init = run_cli({"train", "--manifest", manifest_, "--init-weights", checkpoint, "--epochs", "1",
                               "--hidden", "4"});
  ASSERT_EQ(init.code, 0) << init.err;
  EXPECT_NE(init.err.find("imported "), std::string::npos) << init.err;
}

TEST_F(CliData, MissingCheckpointIsARuntimeError) {
  const Result r = run_cli({"eval", "--manifest", manifest_, "--checkpoint", (root_ / "absent").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

}  // namespace
}  // namespace selrcn
