#pragma once

#include "lemmas.hpp"
#include "market_json.hpp"

namespace splc {

inline Json lemma_report_to_json(const LemmaReport &report) {
    Json doc;
    doc["verdict"] = report.pass() ? "pass" : "fail";
    doc["copy"] = report.copy;
    doc["H"] = report.H.str();
    doc["L"] = report.L.str();
    std::size_t failed = 0;
    Json records = Json::array();
    for (const auto &r : report.records) {
        failed += r.pass ? 0 : 1;
        Json jr;
        jr["id"] = r.id;
        jr["scope"] = r.scope;
        jr["pass"] = r.pass;
        Json w = Json::object();
        for (const auto &[name, value] : r.witnesses) {
            w[name] = value.str();
        }
        jr["witnesses"] = std::move(w);
        if (!r.note.empty()) {
            jr["note"] = r.note;
        }
        records.push_back(std::move(jr));
    }
    doc["checked"] = report.records.size();
    doc["failed"] = failed;
    doc["records"] = std::move(records);
    return doc;
}

}  // namespace splc
