#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = NEP_CLI_PATH;
const std::string kDataDir = NEP_TEST_DATA_DIR;
const std::string kMnistArgs = " --images " + kDataDir + "/digits-images-idx3-ubyte.gz" +
                               " --labels " + kDataDir + "/digits-labels-idx1-ubyte.gz";

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string acc;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) acc += buf;
  const int status = pclose(pipe);
  if (output) *output = acc;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fresh_dir(const std::string& name) {
  const std::string path = testing::TempDir() + "cli_" + name;
  fs::remove_all(path);
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// metrics.csv minus the wall_time column, which is the one nondeterministic
// field in a run directory.
std::string metrics_without_wall(const std::string& path) {
  std::ostringstream os;
  for (const std::string& line : read_lines(path)) {
    const std::size_t cut = line.rfind(',');
    os << line.substr(0, cut) << "\n";
  }
  return os.str();
}

std::vector<double> csv_row_values(const std::string& line, std::size_t skip) {
  std::vector<double> vals;
  std::istringstream is(line);
  std::string tok;
  for (std::size_t i = 0; std::getline(is, tok, ','); ++i)
    if (i >= skip) vals.push_back(std::strtod(tok.c_str(), nullptr));
  return vals;
}

TEST(CliTrain, Xor9WritesAllArtifacts) {
  const std::string dir = fresh_dir("xor9_artifacts");
  std::string out;
  const int rc = run_cli("train --task xor9 --stop-train-loss 0.02 --out-dir " + dir, &out);
  ASSERT_EQ(rc, 0) << out;
  EXPECT_TRUE(fs::exists(dir + "/config.toml"));
  EXPECT_TRUE(fs::exists(dir + "/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir + "/checkpoint.txt"));
  EXPECT_TRUE(fs::exists(dir + "/report.txt"));
  const std::vector<std::string> metrics = read_lines(dir + "/metrics.csv");
  ASSERT_GE(metrics.size(), 2u);
  EXPECT_EQ(metrics[0], "epoch,train_loss,val_loss,val_accuracy,wall_time");
  EXPECT_NE(read_file(dir + "/report.txt").find("status ok"), std::string::npos);
  EXPECT_NE(read_file(dir + "/config.toml").find("task = xor9"), std::string::npos);
}

TEST(CliTrain, RerunWithSameSeedIsIdentical) {
  const std::string d1 = fresh_dir("det_a"), d2 = fresh_dir("det_b");
  ASSERT_EQ(run_cli("train --task xor9 --epochs 4 --out-dir " + d1), 0);
  ASSERT_EQ(run_cli("train --task xor9 --epochs 4 --out-dir " + d2), 0);
  EXPECT_EQ(metrics_without_wall(d1 + "/metrics.csv"), metrics_without_wall(d2 + "/metrics.csv"));
  EXPECT_EQ(read_file(d1 + "/checkpoint.txt"), read_file(d2 + "/checkpoint.txt"));
}

TEST(CliTrain, ThreadCountDoesNotChangeResults) {
  const std::string d1 = fresh_dir("thr_1"), d2 = fresh_dir("thr_2");
  ASSERT_EQ(run_cli("train --task xor9 --epochs 4 --threads 1 --out-dir " + d1), 0);
  ASSERT_EQ(run_cli("train --task xor9 --epochs 4 --threads 2 --out-dir " + d2), 0);
  EXPECT_EQ(metrics_without_wall(d1 + "/metrics.csv"), metrics_without_wall(d2 + "/metrics.csv"));
  EXPECT_EQ(read_file(d1 + "/checkpoint.txt"), read_file(d2 + "/checkpoint.txt"));
}

TEST(CliTrain, ResolvedConfigReplaysTheRun) {
  const std::string d1 = fresh_dir("replay_a"), d2 = fresh_dir("replay_b");
  ASSERT_EQ(run_cli("train --task xor9 --epochs 3 --beta 0.02 --seed 99 --out-dir " + d1), 0);
  std::string out;
  ASSERT_EQ(run_cli("train --config " + d1 + "/config.toml --out-dir " + d2, &out), 0) << out;
  EXPECT_EQ(metrics_without_wall(d1 + "/metrics.csv"), metrics_without_wall(d2 + "/metrics.csv"));
  EXPECT_EQ(read_file(d1 + "/checkpoint.txt"), read_file(d2 + "/checkpoint.txt"));
}

TEST(CliTrain, SeedChangesTheRun) {
  const std::string d1 = fresh_dir("seed_a"), d2 = fresh_dir("seed_b");
  ASSERT_EQ(run_cli("train --task xor9 --epochs 4 --v-noise 0.05 --seed 7 --out-dir " + d1), 0);
  ASSERT_EQ(run_cli("train --task xor9 --epochs 4 --v-noise 0.05 --seed 8 --out-dir " + d2), 0);
  EXPECT_NE(read_file(d1 + "/checkpoint.txt"), read_file(d2 + "/checkpoint.txt"));
}

TEST(CliTrain, DivergentRunFailsButKeepsPartialMetrics) {
  const std::string dir = fresh_dir("diverge");
  std::string out;
  const int rc =
      run_cli("train --task xor9 --epochs 3 --v-noise 60 --seed 7 --out-dir " + dir, &out);
  EXPECT_EQ(rc, 3) << out;
  EXPECT_NE(out.find("training failed"), std::string::npos);
  const std::vector<std::string> metrics = read_lines(dir + "/metrics.csv");
  ASSERT_GE(metrics.size(), 1u);
  EXPECT_EQ(metrics[0], "epoch,train_loss,val_loss,val_accuracy,wall_time");
  EXPECT_FALSE(fs::exists(dir + "/checkpoint.txt"));
  EXPECT_NE(read_file(dir + "/report.txt").find("status failed"), std::string::npos);
}

TEST(CliTrain, UnknownTaskRejected) {
  std::string out;
  EXPECT_NE(run_cli("train --task bogus --out-dir " + fresh_dir("bogus"), &out), 0);
}

TEST(CliTrain, MnistWithoutDataPathsRejected) {
  std::string out;
  EXPECT_EQ(run_cli("train --task mnist5 --out-dir " + fresh_dir("nodata"), &out), 1);
  EXPECT_NE(out.find("--images"), std::string::npos);
}

TEST(CliEval, ReplaysTrainedXorCheckpoint) {
  const std::string td = fresh_dir("eval_train"), ed = fresh_dir("eval_out");
  ASSERT_EQ(run_cli("train --task xor9 --stop-train-loss 0.02 --out-dir " + td), 0);
  std::string out;
  const int rc = run_cli("eval --config " + td + "/config.toml --checkpoint " + td +
                             "/checkpoint.txt --split train --out-dir " + ed,
                         &out);
  ASSERT_EQ(rc, 0) << out;
  const std::vector<std::string> rows = read_lines(ed + "/readouts.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "index,label,readout0,target0");
  // Row order matches the task dataset: 00, 01, 10, 11.
  const double n00 = csv_row_values(rows[1], 2)[0];
  const double n01 = csv_row_values(rows[2], 2)[0];
  const double n10 = csv_row_values(rows[3], 2)[0];
  const double n11 = csv_row_values(rows[4], 2)[0];
  EXPECT_LT(n00, 0.1);
  EXPECT_LT(n11, 0.1);
  EXPECT_GT(n01, 0.8);
  EXPECT_LT(n01, 1.2);
  EXPECT_GT(n10, 0.8);
  EXPECT_LT(n10, 1.2);
  EXPECT_NE(read_file(ed + "/report.txt").find("outputs:"), std::string::npos);
}

TEST(CliEval, DigestMismatchRefusedUnlessForced) {
  const std::string td = fresh_dir("digest_train");
  ASSERT_EQ(run_cli("train --task xor9 --epochs 1 --out-dir " + td), 0);
  std::string out;
  const int rc = run_cli("eval --task xor9 --g 0.2 --checkpoint " + td +
                             "/checkpoint.txt --split train --out-dir " + fresh_dir("digest_e1"),
                         &out);
  EXPECT_EQ(rc, 2);
  EXPECT_NE(out.find("digest"), std::string::npos);
  EXPECT_NE(out.find("--force"), std::string::npos);
  const int rc2 = run_cli("eval --task xor9 --g 0.2 --checkpoint " + td +
                              "/checkpoint.txt --split train --force --out-dir " +
                              fresh_dir("digest_e2"),
                          &out);
  EXPECT_EQ(rc2, 0) << out;
}

TEST(CliEval, MissingCheckpointFails) {
  std::string out;
  EXPECT_EQ(run_cli("eval --task xor9 --checkpoint /nonexistent.ck --split train --out-dir " +
                        fresh_dir("nock"),
                    &out),
            1);
}

TEST(CliEval, ConfusionRowsSumToPerClassCounts) {
  const std::string td = fresh_dir("mnist_train"), ed = fresh_dir("mnist_eval");
  std::string out;
  ASSERT_EQ(run_cli("train --task mnist5" + kMnistArgs +
                        " --samples-per-digit 16 --epochs 1 --out-dir " + td,
                    &out),
            0)
      << out;
  EXPECT_TRUE(fs::exists(td + "/pca.txt"));
  ASSERT_EQ(run_cli("eval --config " + td + "/config.toml --checkpoint " + td +
                        "/checkpoint.txt --split test --out-dir " + ed,
                    &out),
            0)
      << out;
  const std::vector<std::string> rows = read_lines(ed + "/confusion.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "true,pred0,pred1,pred3,pred6,pred9");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::vector<double> counts = csv_row_values(rows[i], 1);
    double sum = 0.0;
    for (double c : counts) sum += c;
    EXPECT_DOUBLE_EQ(sum, 2.0) << "row " << i;  // 16 per digit -> 2 test samples per class
  }
}

TEST(CliGradcheck, ReportsAgreementAndJacobianResiduals) {
  const std::string dir = fresh_dir("gradcheck");
  std::string out;
  const int rc =
      run_cli("gradcheck --task xor9 --gc-samples 4 --min-cosine 0.5 --out-dir " + dir, &out);
  ASSERT_EQ(rc, 0) << out;
  EXPECT_NE(out.find("cosine_similarity"), std::string::npos);
  EXPECT_NE(out.find("gradcheck ok"), std::string::npos);
  const std::vector<std::string> rows = read_lines(dir + "/gradcheck.csv");
  ASSERT_EQ(rows.size(), 12u);  // header + 9 potentials + 2 pump weights
  EXPECT_EQ(rows[0], "param,nep_grad,fd_grad");
  const std::string report = read_file(dir + "/report.txt");
  EXPECT_NE(report.find("cosine_similarity"), std::string::npos);
  EXPECT_NE(report.find("jacobian_sym_residual"), std::string::npos);
}

TEST(CliGradcheck, ExitsNonzeroBelowThreshold) {
  std::string out;
  const int rc = run_cli(
      "gradcheck --task xor9 --gc-samples 2 --min-cosine 0.9999 --out-dir " + fresh_dir("gc_fail"),
      &out);
  EXPECT_EQ(rc, 4) << out;
  EXPECT_NE(out.find("FAILED"), std::string::npos);
}

TEST(CliSweep, EmptyValueListIsNoOp) {
  const std::string dir = fresh_dir("sweep_empty");
  std::string out;
  EXPECT_EQ(run_cli("sweep --task xor9 --param g --out-dir " + dir, &out), 0);
  EXPECT_NE(out.find("nothing to do"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir + "/sweep.csv"));
}

TEST(CliSweep, RunsPerValueAndAggregates) {
  const std::string dir = fresh_dir("sweep_beta");
  std::string out;
  ASSERT_EQ(
      run_cli("sweep --task xor9 --param beta --values 0.01 0.05 --epochs 2 --out-dir " + dir,
              &out),
      0)
      << out;
  const std::vector<std::string> rows = read_lines(dir + "/sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0],
            "param,value,status,epochs,final_train_loss,final_val_loss,final_val_accuracy,"
            "best_val_accuracy");
  EXPECT_NE(rows[1].find("beta,0.01,ok"), std::string::npos);
  EXPECT_NE(rows[2].find("beta,0.05,ok"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir + "/beta_0.01/metrics.csv"));
  EXPECT_TRUE(fs::exists(dir + "/beta_0.01/config.toml"));
  EXPECT_TRUE(fs::exists(dir + "/beta_0.05/checkpoint.txt"));
}

TEST(CliSweep, FailuresAreIsolated) {
  const std::string dir = fresh_dir("sweep_fail");
  std::string out;
  ASSERT_EQ(run_cli("sweep --task xor9 --param g --values 0.1 abc --epochs 1 --out-dir " + dir,
                    &out),
            0)
      << out;
  const std::vector<std::string> rows = read_lines(dir + "/sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[1].find("g,0.1,ok"), std::string::npos);
  EXPECT_NE(rows[2].find("g,abc,failed"), std::string::npos);
}

TEST(CliSweep, TrainFlagComparisonCompletes) {
  const std::string dir = fresh_dir("sweep_flags");
  std::string out;
  ASSERT_EQ(run_cli("sweep --task xor9 --param train_flags --values on off --epochs 2 --out-dir " +
                        dir,
                    &out),
            0)
      << out;
  const std::vector<std::string> rows = read_lines(dir + "/sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[1].find("train_flags,on,ok"), std::string::npos);
  EXPECT_NE(rows[2].find("train_flags,off,ok"), std::string::npos);
  EXPECT_NE(read_file(dir + "/train_flags_off/config.toml").find("train = v"), std::string::npos);
}

}  // namespace
