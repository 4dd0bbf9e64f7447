/*
 * Copyright 2026 The Skillpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "skillpath/commands.hpp"
#include "skillpath/http_server.hpp"
#include "skillpath/service.hpp"

namespace {

skillpath::ReviewServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int serve(const std::filesystem::path& config_path,
          const std::optional<std::filesystem::path>& session, const std::string& bind) {
  using namespace skillpath;
  try {
    const ProjectConfig c =
        run_stage("config", [&] { return load_project_config(config_path, false); });
    const BindAddress addr = run_stage("serve", [&] { return parse_bind(bind); });
    SessionService service = run_stage(
        "session", [&] { return SessionService::from_config(c, session.value_or(c.session)); });
    ReviewServer server(service);
    const int port = run_stage("serve", [&] { return server.bind(addr); });
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "serving " << session.value_or(c.session).string() << " on http://" << addr.host
              << ":" << port << std::endl;
    server.listen_after_bind();
    g_server = nullptr;
    return kExitOk;
  } catch (const StageError& e) {
    std::cerr << "skillpath serve: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skillpath: demonstration capture to robot program"};
  app.require_subcommand(1);

  std::string config, session, backend = "portable", out, bind = "127.0.0.1:8080";
  bool force = false;
  std::uint64_t seed = 7;

  auto* fuse = app.add_subcommand("fuse", "fuse traces with the nominal path and validate");
  fuse->add_option("--config", config, "project config")->required();
  fuse->add_option("--session", session, "session file to write (default from config)");

  auto* validate = app.add_subcommand("validate", "re-validate a session");
  validate->add_option("--config", config, "project config")->required();
  validate->add_option("--session", session, "session file (default from config)");

  auto* emit = app.add_subcommand("emit", "write the robot program for an approved session");
  emit->add_option("--config", config, "project config")->required();
  emit->add_option("--session", session, "session file (default from config)");
  emit->add_option("--backend", backend, "portable or inform")
      ->check(CLI::IsMember({"portable", "inform"}));
  emit->add_option("--out", out, "output file")->required();
  emit->add_flag("--force", force, "emit without approval (recorded in the header)");

  auto* serve_cmd = app.add_subcommand("serve", "serve a session for review");
  serve_cmd->add_option("--config", config, "project config")->required();
  serve_cmd->add_option("--session", session, "session file (default from config)");
  serve_cmd->add_option("--bind", bind, "host:port");

  auto* synth = app.add_subcommand("synth", "synthesize a demonstration from the config scenario");
  synth->add_option("--config", config, "project config with a scenario section")->required();
  synth->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : skillpath::kExitError;
  }

  const std::optional<std::filesystem::path> session_opt =
      session.empty() ? std::nullopt : std::optional<std::filesystem::path>(session);
  // Subcommands other than fuse/synth need a session path even if the user
  // relies on the config default.
  auto session_path = [&]() -> std::optional<std::filesystem::path> {
    if (session_opt) return session_opt;
    try {
      return skillpath::load_project_config(config, false).session;
    } catch (const std::exception& e) {
      std::cerr << "skillpath: config: " << e.what() << "\n";
      return std::nullopt;
    }
  };

  if (*fuse) return skillpath::cmd_fuse(config, session_opt);
  if (*synth) return skillpath::cmd_synth(config, seed);
  if (*serve_cmd) return serve(config, session_opt, bind);
  const auto sp = session_path();
  if (!sp) return skillpath::kExitError;
  if (*validate) return skillpath::cmd_validate(config, *sp);
  return skillpath::cmd_emit(config, *sp, skillpath::parse_backend(backend), out, force);
}
