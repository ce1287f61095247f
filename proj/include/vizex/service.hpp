#pragma once

#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "vizex/project.hpp"
#include "vizex/query.hpp"

namespace vizex {

// Machine code such as UNKNOWN_KPI, and the HTTP status it is served with.
std::string api_code(ErrorCode code);
int http_status(ErrorCode code);
nlohmann::json api_error_json(const Error& e);

struct QueryRun {
    QueryResult result;
    std::string file_name;  // content address under results/
    std::string body;       // serialized result, byte-stable
};

// Parses, executes and (for on-disk projects) persists a query.
QueryRun run_query(const Project& project, const std::string& text, const QueryConfig& config);

struct ServiceOptions {
    bool frames_enabled = true;
    QueryConfig query_config;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Routing and request handling, independent of the socket layer.
class Service {
public:
    Service(std::vector<std::shared_ptr<Project>> projects, ServiceOptions options = {});

    ApiResponse handle(const std::string& method, const std::string& path,
                       const std::map<std::string, std::string>& params, const std::string& body) const;

    const std::vector<std::shared_ptr<Project>>& projects() const { return projects_; }

private:
    const Project& find(const std::string& id) const;
    nlohmann::json project_summary(const Project& p) const;
    ApiResponse route(const std::string& method, const std::vector<std::string>& parts,
                      const std::map<std::string, std::string>& params, const std::string& body) const;
    ApiResponse query(const Project& p, const std::string& body) const;
    nlohmann::json results_index(const Project& p) const;

    std::vector<std::shared_ptr<Project>> projects_;
    ServiceOptions options_;

    // Concurrent identical queries share one execution; finished bodies stay cached.
    mutable std::mutex mu_;
    mutable std::map<std::string, std::shared_future<std::shared_ptr<const QueryRun>>> runs_;
};

// Blocks serving the API on host:port until `stop` is requested. Throws
// PortInUse when binding fails.
void serve(const Service& service, const std::string& host, int port, std::stop_token stop = {});

}  // namespace vizex
