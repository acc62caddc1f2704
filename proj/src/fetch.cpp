#include "va/error.hpp"
#include "va/ingest.hpp"

// After the Eigen headers: resolv.h defines a macro that collides with Eigen names.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace va {

namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string &url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw FetchError("malformed URL '" + url + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

Table fetch_phmrc(PhmrcModule module, const FetchOptions &options) {
    const std::string url = options.url.value_or(phmrc_url(module));
    auto [origin, path] = split_url(url);

    httplib::Client client(origin);
    if (!client.is_valid()) {
        throw FetchError("cannot create HTTP client for " + url);
    }
    client.set_follow_location(true);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);

    // Header record plus the requested number of data records.
    const std::size_t wanted = options.row_limit ? *options.row_limit + 1 : SIZE_MAX;
    std::string body;
    bool enough = false;
    int status = 0;
    auto result = client.Get(
        path,
        [&](const httplib::Response &response) {
            status = response.status;
            return response.status == 200;
        },
        [&](const char *data, std::size_t length) {
            body.append(data, length);
            if (wanted != SIZE_MAX && scan_records(body, wanted).records >= wanted) {
                enough = true;
                return false;
            }
            return true;
        });
    if (!result && !enough) {
        if (status != 0 && status != 200) {
            throw FetchError("GET " + url + " returned HTTP " + std::to_string(status));
        }
        throw FetchError("GET " + url + " failed: " + httplib::to_string(result.error()));
    }
    if (result && result->status != 200) {
        throw FetchError("GET " + url + " returned HTTP " + std::to_string(result->status));
    }
    if (wanted != SIZE_MAX) {
        auto scan = scan_records(body, wanted);
        if (scan.records >= wanted) {
            body.resize(scan.end_offset);
        }
    }

    Table table = read_csv(std::string_view(body));
    if (module == PhmrcModule::Adult && table.width() != kPhmrcAdultColumns) {
        throw SchemaError("PHMRC adult table has " + std::to_string(table.width()) +
                          " columns, expected " + std::to_string(kPhmrcAdultColumns));
    }
    return table;
}

} // namespace va
