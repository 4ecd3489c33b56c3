/*
 * Copyright 2026 The gppta Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// HTTP server for live audiometry sessions.
//
//   gppta-server [--host 127.0.0.1] [--port 8080] [--data-dir ./gppta_data]
//
// GPPTA_BIND ("host:port") and GPPTA_DATA_DIR override the defaults; flags win.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gppta/http.hpp"

int main(int argc, char** argv) {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "gppta_data";
    if (const char* bind = std::getenv("GPPTA_BIND")) {
        const std::string b = bind;
        const auto colon = b.rfind(':');
        if (colon != std::string::npos) {
            host = b.substr(0, colon);
            port = std::atoi(b.c_str() + colon + 1);
        } else {
            host = b;
        }
    }
    if (const char* dir = std::getenv("GPPTA_DATA_DIR")) data_dir = dir;

    CLI::App app{"gppta session server"};
    app.add_option("--host", host, "Bind address")->capture_default_str();
    app.add_option("--port", port, "Port")->capture_default_str();
    app.add_option("--data-dir", data_dir, "Directory for session logs")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        gppta::SessionService service(data_dir);
        httplib::Server server;
        gppta::mount_routes(server, service);
        std::cout << "serving " << service.session_ids().size() << " session(s) from " << data_dir << " on " << host
                  << ':' << port << std::endl;
        if (!server.listen(host, port)) {
            std::cerr << "error: cannot bind " << host << ':' << port << '\n';
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
