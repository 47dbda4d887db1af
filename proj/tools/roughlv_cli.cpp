#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "roughlv/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rough Bergomi local-volatility experiments"};
  app.set_version_flag("--version", roughlv::version_string());

  std::string subcommand;
  std::string config_path;
  std::string profile = "desk";
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;

  std::string choices;
  for (auto s : roughlv::kSubcommands) choices += std::string(choices.empty() ? "" : ", ") + std::string(s);
  app.add_option("command", subcommand, "One of: " + choices)->required();
  app.add_option("--config", config_path, "INI file overriding the profile")->envname("ROUGHLV_CONFIG");
  app.add_option("--profile", profile, "desk, paper or smoke")
      ->envname("ROUGHLV_PROFILE")
      ->check(CLI::IsMember({"desk", "paper", "smoke"}));
  auto* seed_opt = app.add_option("--seed", seed, "Master seed")->envname("ROUGHLV_SEED");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads")
                          ->envname("ROUGHLV_THREADS")
                          ->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "Output directory")->envname("ROUGHLV_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = roughlv::profile_config(roughlv::parse_profile(profile));
    if (!config_path.empty()) config = roughlv::load_config(config_path, config);
    if (*seed_opt) config.seed = seed;
    if (*threads_opt) config.threads = threads;
    if (*out_opt) config.out_dir = out;
    config.validate();
    return roughlv::run(config, subcommand, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
