#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace harness {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string quote(const std::string &s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the built CLI as a separate process and captures both streams.
inline CliRun run_cli(const std::vector<std::string> &args) {
  static int counter = 0;
  const auto err_path = std::filesystem::temp_directory_path() /
                        ("mhplan_cli_err_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::string cmd = quote(MHPLAN_CLI_PATH);
  for (const auto &a : args) cmd += " " + quote(a);
  cmd += " 2>" + quote(err_path.string());
  CliRun r;
  FILE *pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  std::filesystem::remove(err_path);
  return r;
}

inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto p = std::filesystem::temp_directory_path() / ("mhplan_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace harness
