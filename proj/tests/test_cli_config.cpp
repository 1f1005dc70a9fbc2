// Copyright 2026 The rainbow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rainbow/config.hpp"

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gtest/gtest.h"

using namespace rainbow;
namespace fs = std::filesystem;

namespace {

ConfigFile parse(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in);
}

int error_line(const std::string &text) {
    try {
        parse(text);
    } catch (const ConfigError &e) {
        return e.line();
    }
    return -1;
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("rainbow_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path file(const std::string &name) const { return dir_ / name; }

    void write(const std::string &name, const std::string &text) const { std::ofstream(file(name)) << text; }

    static std::string read(const fs::path &p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    // Exit status of the CLI; stdout and stderr land in files.
    int run(const std::string &args) {
        const std::string cmd = std::string(RAINBOW_CLI) + " " + args + " > " + file("stdout").string() + " 2> " +
                                file("stderr").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string out() const { return read(file("stdout")); }
    std::string err() const { return read(file("stderr")); }

    fs::path dir_;
};

}  // namespace

TEST(config, parses_keys_values_and_comments) {
    const auto c = parse("# header\n\n  lx = 6\nly=2\n; other comment\nvariant = \"IZ\"\npost-select = true\nT = 0.4\n");
    ASSERT_EQ(c.entries.size(), 5u);
    EXPECT_EQ(c.find("lx")->value, "6");
    EXPECT_EQ(c.find("lx")->line, 3);
    EXPECT_EQ(c.find("ly")->value, "2");
    EXPECT_EQ(c.find("variant")->value, "IZ");
    EXPECT_EQ(c.find("post_select")->value, "true");
    EXPECT_EQ(c.find("T")->value, "0.4");
    EXPECT_EQ(c.find("jx"), nullptr);
}

TEST(config, empty_file_has_no_entries) {
    EXPECT_TRUE(parse("").entries.empty());
    EXPECT_TRUE(parse("# only a comment\n\n").entries.empty());
}

TEST(config, errors_carry_the_line_number) {
    EXPECT_EQ(error_line("lx = 4\njx = 1\njx = 2\n"), 3);
    EXPECT_EQ(error_line("lx = 4\n\nno equals sign\n"), 3);
    EXPECT_EQ(error_line("lx =\n"), 1);
    EXPECT_EQ(error_line("lx = 4\n2bad = 1\n"), 2);
    EXPECT_EQ(error_line("a = \"x\nb = 1\n"), 1);
    // post-select and post_select name the same key.
    EXPECT_EQ(error_line("post_select = true\npost-select = false\n"), 2);
    EXPECT_THROW(load_config("/nonexistent/rainbow.cfg"), ConfigError);
}

TEST(config, number_format) {
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(1e-15), "1e-15");
    EXPECT_EQ(format_number(123456789012345.0), "1.23456789012e+14");
}

TEST(config, header_lines) {
    std::ostringstream os;
    write_header(os, "teleport", {{"lx", "4"}, {"jx", "1"}});
    EXPECT_EQ(os.str(), std::string("# rainbow = ") + kVersion + "\n# command = teleport\n# lx = 4\n# jx = 1\n");
}

TEST_F(Cli, verify_eig_reports_four_small_residuals) {
    ASSERT_EQ(run("verify-eig --lx 10 --ly 2"), 0) << err();
    std::istringstream in(out());
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!header) {
            EXPECT_EQ(line, "variant,energy,residual");
            header = true;
            continue;
        }
        ++rows;
        EXPECT_LT(std::stod(line.substr(line.rfind(',') + 1)), 1e-10) << line;
    }
    EXPECT_EQ(rows, 4);
}

TEST_F(Cli, teleport_without_measurement_or_time) {
    ASSERT_EQ(run("teleport --lx 4 --ly 1 --e-pairs 0 --t-max 0"), 0) << err();
    const std::string o = out();
    EXPECT_EQ(o.substr(o.find("t,P,F,F_stderr")), "t,P,F,F_stderr\n0,1,0.5,0\n");
}

TEST_F(Cli, usage_errors_exit_with_two) {
    EXPECT_EQ(run("verify-eig --ly 2"), 2);
    EXPECT_NE(err().find("--lx"), std::string::npos);
    EXPECT_EQ(run("verify-eig --lx 4 --ly 2 --no-such-flag"), 2);
    EXPECT_EQ(run("no-such-command"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("verify-eig --lx 3 --ly 2"), 2);
    EXPECT_EQ(run("teleport --lx 4 --ly 2 --e-pairs 9"), 2);
    EXPECT_EQ(run("verify-eig --help"), 0);
}

TEST_F(Cli, flags_override_config_file) {
    write("a.cfg", "jx = 1.0\nT = 0.3\nsteps = 2\npost_select = true\n");
    ASSERT_EQ(run("--config " + file("a.cfg").string() + " engineer-iterate --lx 4 --ly 2 --jx 2.0"), 0) << err();
    const std::string o = out();
    EXPECT_NE(o.find("# jx = 2\n"), std::string::npos);
    EXPECT_NE(o.find("# T = 0.3\n"), std::string::npos);
    EXPECT_NE(o.find("# post_select = true\n"), std::string::npos);
    EXPECT_NE(o.find("n,F,S2,MI_far,MI_near,p_reset\n"), std::string::npos);
}

TEST_F(Cli, empty_config_gives_defaults) {
    write("empty.cfg", "");
    ASSERT_EQ(run("engineer-iterate --lx 4 --ly 2 --steps 1 --config " + file("empty.cfg").string()), 0) << err();
    const std::string o = out();
    EXPECT_NE(o.find("# jx = 1\n"), std::string::npos);
    EXPECT_NE(o.find("# jy = 1.2\n"), std::string::npos);
    EXPECT_NE(o.find("# T = 0.4\n"), std::string::npos);
}

TEST_F(Cli, bad_config_files_exit_with_two) {
    write("dup.cfg", "jx = 1\njy = 1\njx = 2\n");
    EXPECT_EQ(run("--config " + file("dup.cfg").string() + " verify-eig --lx 4 --ly 2"), 2);
    EXPECT_NE(err().find("line 3"), std::string::npos) << err();
    write("bad.cfg", "jx = 1\nwhat\n");
    EXPECT_EQ(run("--config " + file("bad.cfg").string() + " verify-eig --lx 4 --ly 2"), 2);
    EXPECT_NE(err().find("line 2"), std::string::npos) << err();
    write("unknown.cfg", "steps = 4\n");
    EXPECT_EQ(run("--config " + file("unknown.cfg").string() + " verify-eig --lx 4 --ly 2"), 2);
    EXPECT_NE(err().find("line 1"), std::string::npos) << err();
    write("value.cfg", "jx = abc\n");
    EXPECT_EQ(run("--config " + file("value.cfg").string() + " verify-eig --lx 4 --ly 2"), 2);
    EXPECT_EQ(run("--config " + file("missing.cfg").string() + " verify-eig --lx 4 --ly 2"), 2);
}

TEST_F(Cli, trajectory_output_is_byte_identical) {
    const std::string args = "trajectories --lx 4 --ly 2 --n-traj 6 --seed 5 --out ";
    ASSERT_EQ(run(args + file("a.csv").string()), 0) << err();
    ASSERT_EQ(run(args + file("b.csv").string()), 0) << err();
    const std::string a = read(file("a.csv"));
    EXPECT_EQ(a, read(file("b.csv")));
    EXPECT_EQ(read(file("a.json")), read(file("b.json")));
    EXPECT_NE(a.find("traj_id,n_tot,n_c,converged\n"), std::string::npos);
    EXPECT_NE(a.find("# seed = 5\n"), std::string::npos);

    const auto summary = nlohmann::json::parse(read(file("a.json")));
    for (const char *key : {"mean_n_tot", "median_n_tot", "mode_n_tot", "mean_n_c"}) EXPECT_TRUE(summary.contains(key)) << key;
    EXPECT_EQ(summary["n_traj"], 6);
}

TEST_F(Cli, gap_sweep_writes_table_and_summary) {
    ASSERT_EQ(run("engineer-gap --lx 4 --ly 1 --t-min 0.2 --t-max 0.6 --t-steps 3 --out " + file("gap.csv").string()), 0)
        << err();
    const std::string csv = read(file("gap.csv"));
    const auto body = csv.substr(csv.find("T,lambda2_re,lambda2_im,abs_lambda2,gap,residual\n"));
    EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 4);
    const auto summary = nlohmann::json::parse(read(file("gap.json")));
    EXPECT_GT(summary["max_gap"].get<double>(), 0.0);
}

TEST_F(Cli, numerical_failure_exits_with_one) {
    // Ritz residuals cannot reach 1e-30, so the eigensolver gives up.
    EXPECT_EQ(run("engineer-gap --lx 4 --ly 2 --t-min 0.4 --t-max 0.4 --t-steps 1 --arnoldi-tol 1e-30"), 1);
    EXPECT_NE(err().find("did not converge"), std::string::npos) << err();
}
