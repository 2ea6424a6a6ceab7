#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "msm/io.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(MSMSURV_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("command-line exit codes") {
    const auto dir = fs::temp_directory_path() / "msm_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    CHECK(run("--version") == 0);
    CHECK(run("nosuchcommand") == 2);
    CHECK(run("simulate") == 2);
    CHECK(run("simulate --config " + (dir / "missing.json").string()) == 2);

    msm::write_file_atomic(dir / "bad.json", "{\"truth\":\"default\",\"status3_fraction\":3}");
    CHECK(run("simulate --config " + (dir / "bad.json").string()) == 2);

    msm::write_file_atomic(dir / "sim.json", "{\"truth\":\"default\",\"n\":50,\"seed\":2}");
    CHECK(run("simulate --config " + (dir / "sim.json").string() + " --out " + (dir / "data").string()) == 0);
    CHECK(fs::exists(dir / "data" / "observations.csv"));
    CHECK(fs::exists(dir / "data" / "truth.json"));

    msm::write_file_atomic(dir / "ragged.csv", "subject_id,from_state,to_state,time_days,status\nP1,Hospital\n");
    CHECK(run("fit --data " + (dir / "ragged.csv").string() + " --out " + (dir / "fit").string()) == 2);
    CHECK(run("predict " + (dir / "nothing.json").string()) == 2);
    fs::remove_all(dir);
}
