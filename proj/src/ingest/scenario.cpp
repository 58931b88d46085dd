#include "provsense/ingest/scenario.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "provsense/errors.hpp"

namespace provsense {

namespace {

struct Builder {
    std::vector<Event>* out;
    std::int64_t ts = 0;
    std::size_t counter = 0;

    void emit(const std::string& rel, const std::string& sid, EntityKind sk,
              const std::string& oid, EntityKind ok,
              std::map<std::string, std::string> attrs) {
        Event e;
        e.event_id = "e" + std::to_string(counter++);
        e.ts = ts;
        ts += 1000;
        e.relation = rel;
        e.subject_id = sid;
        e.subject_kind = sk;
        e.object_id = oid;
        e.object_kind = ok;
        e.attrs = std::move(attrs);
        out->push_back(std::move(e));
    }
};

std::string rand_ip(std::mt19937_64& rng) {
    // Octets come from a small pool so each octet token recurs across many
    // flows; tokens seen only once would carry untrained, noisy embeddings.
    static constexpr int kOctets[32] = {10,  23,  37,  45,  56,  68,  77,  84,
                                        91,  99,  104, 113, 120, 131, 139, 144,
                                        155, 162, 169, 178, 183, 190, 197, 205,
                                        214, 221, 226, 235, 241, 244, 248, 253};
    std::uniform_int_distribution<int> oct(0, 31);
    return std::to_string(kOctets[oct(rng)]) + "." + std::to_string(kOctets[oct(rng)]) +
           "." + std::to_string(kOctets[oct(rng)]) + "." +
           std::to_string(kOctets[oct(rng)]);
}

// Template entities share vocabulary with the attack chain (nginx processes,
// /tmp and /var/log files) so that attribute features alone do not give the
// attack away.
struct TemplateInstance {
    // (id, kind) of every entity this instance created, used for extra
    // interaction sampling.
    std::vector<std::pair<std::string, EntityKind>> procs;
    std::vector<std::pair<std::string, EntityKind>> objects;
    std::size_t entity_count = 0;
};

constexpr const char* kNginxConf = "file:/etc/nginx/nginx.conf";

TemplateInstance emit_web(Builder& b, std::mt19937_64& rng, std::size_t idx) {
    TemplateInstance t;
    std::string nginx = "proc:nginx-w" + std::to_string(idx);
    std::string page = "file:/var/www/page" + std::to_string(idx) + ".html";
    std::string log = "file:/var/log/nginx/access" + std::to_string(idx) + ".log";
    std::string ip1 = "net:" + rand_ip(rng);
    std::string ip2 = "net:" + rand_ip(rng);
    auto pattrs = [&] {
        return std::map<std::string, std::string>{{"subject.name", "nginx"}};
    };
    // Every server loads the shared configuration file at startup, so the
    // config node becomes a high-degree hub of the benign background.
    b.emit("read", nginx, EntityKind::Process, kNginxConf, EntityKind::File,
           {{"subject.name", "nginx"}, {"object.path", "/etc/nginx/nginx.conf"}});
    b.emit("connect", nginx, EntityKind::Process, ip1, EntityKind::Netflow,
           {{"subject.name", "nginx"}, {"object.ip", ip1.substr(4)}});
    b.emit("recv", nginx, EntityKind::Process, ip1, EntityKind::Netflow, pattrs());
    b.emit("read", nginx, EntityKind::Process, page, EntityKind::File,
           {{"subject.name", "nginx"}, {"object.path", page.substr(5)}});
    b.emit("send", nginx, EntityKind::Process, ip1, EntityKind::Netflow, pattrs());
    b.emit("connect", nginx, EntityKind::Process, ip2, EntityKind::Netflow,
           {{"subject.name", "nginx"}, {"object.ip", ip2.substr(4)}});
    b.emit("write", nginx, EntityKind::Process, log, EntityKind::File,
           {{"subject.name", "nginx"}, {"object.path", log.substr(5)}});
    t.procs = {{nginx, EntityKind::Process}};
    t.objects = {{page, EntityKind::File}, {log, EntityKind::File},
                 {ip1, EntityKind::Netflow}, {ip2, EntityKind::Netflow}};
    t.entity_count = 5;
    if (idx == 0) {
        t.objects.push_back({kNginxConf, EntityKind::File});
        t.entity_count += 1;
    }
    // Every third server runs a CGI helper, so process execution is ordinary
    // background behaviour rather than an attack fingerprint.
    if (idx % 3 == 0) {
        std::string cgi = "proc:cgi-" + std::to_string(idx);
        b.emit("execute", nginx, EntityKind::Process, cgi, EntityKind::Process,
               {{"subject.name", "nginx"}, {"object.name", "cgi"}});
        b.emit("read", cgi, EntityKind::Process, page, EntityKind::File,
               {{"subject.name", "cgi"}, {"object.path", page.substr(5)}});
        // The helper answers on the server's socket, so netflows touched by
        // two different processes are normal background behaviour.
        b.emit("recv", cgi, EntityKind::Process, ip1, EntityKind::Netflow,
               {{"subject.name", "cgi"}});
        b.emit("send", cgi, EntityKind::Process, ip1, EntityKind::Netflow,
               {{"subject.name", "cgi"}});
        t.procs.push_back({cgi, EntityKind::Process});
        t.entity_count += 1;
    }
    return t;
}

// An ssh server handling normal logins. Shares the name "sshd" (and its log
// directory) with the process the attack later injects into.
TemplateInstance emit_ssh(Builder& b, std::mt19937_64& rng, std::size_t idx) {
    TemplateInstance t;
    std::string sshd = "proc:sshd-h" + std::to_string(idx);
    std::string log = "file:/var/log/auth" + std::to_string(idx) + ".log";
    std::string ip = "net:" + rand_ip(rng);
    auto pattrs = [&] {
        return std::map<std::string, std::string>{{"subject.name", "sshd"}};
    };
    b.emit("connect", sshd, EntityKind::Process, ip, EntityKind::Netflow,
           {{"subject.name", "sshd"}, {"object.ip", ip.substr(4)}});
    b.emit("recv", sshd, EntityKind::Process, ip, EntityKind::Netflow, pattrs());
    b.emit("send", sshd, EntityKind::Process, ip, EntityKind::Netflow, pattrs());
    b.emit("write", sshd, EntityKind::Process, log, EntityKind::File,
           {{"subject.name", "sshd"}, {"object.path", log.substr(5)}});
    t.procs = {{sshd, EntityKind::Process}};
    t.objects = {{log, EntityKind::File}, {ip, EntityKind::Netflow}};
    t.entity_count = 3;
    return t;
}

TemplateInstance emit_edit(Builder& b, std::mt19937_64& rng, std::size_t idx) {
    TemplateInstance t;
    std::string vim = "proc:vim-" + std::to_string(idx);
    std::string doc = "file:/home/user/doc" + std::to_string(idx) + ".txt";
    std::string swp = "file:/tmp/swp" + std::to_string(rng() % 100000);
    auto fa = [&](const std::string& f) {
        return std::map<std::string, std::string>{{"subject.name", "vim"},
                                                  {"object.path", f.substr(5)}};
    };
    b.emit("open", vim, EntityKind::Process, doc, EntityKind::File, fa(doc));
    b.emit("read", vim, EntityKind::Process, doc, EntityKind::File, fa(doc));
    b.emit("write", vim, EntityKind::Process, swp, EntityKind::File, fa(swp));
    b.emit("write", vim, EntityKind::Process, doc, EntityKind::File, fa(doc));
    b.emit("close", vim, EntityKind::Process, doc, EntityKind::File, fa(doc));
    t.procs = {{vim, EntityKind::Process}};
    t.objects = {{doc, EntityKind::File}, {swp, EntityKind::File}};
    t.entity_count = 3;
    return t;
}

TemplateInstance emit_heartbeat(Builder& b, std::mt19937_64&, std::size_t idx) {
    TemplateInstance t;
    std::string cron = "proc:cron-" + std::to_string(idx);
    std::string job = "proc:job-" + std::to_string(idx);
    std::string log = "file:/var/log/cron" + std::to_string(idx) + ".log";
    b.emit("clone", cron, EntityKind::Process, job, EntityKind::Process,
           {{"subject.name", "cron"}, {"object.name", "job"}});
    // Scheduler reniced the job: process-modifying events occur benignly too.
    b.emit("change", cron, EntityKind::Process, job, EntityKind::Process,
           {{"subject.name", "cron"}, {"object.name", "job"}});
    b.emit("write", job, EntityKind::Process, log, EntityKind::File,
           {{"subject.name", "job"}, {"object.path", log.substr(5)}});
    b.emit("exit", cron, EntityKind::Process, job, EntityKind::Process,
           {{"subject.name", "cron"}, {"object.name", "job"}});
    t.procs = {{cron, EntityKind::Process}, {job, EntityKind::Process}};
    t.objects = {{log, EntityKind::File}};
    t.entity_count = 3;
    return t;
}

void emit_extra_events(Builder& b, std::mt19937_64& rng, const TemplateInstance& t,
                       std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        const auto& p = t.procs[rng() % t.procs.size()];
        const auto& o = t.objects.empty() ? t.procs[rng() % t.procs.size()]
                                          : t.objects[rng() % t.objects.size()];
        if (p.first == o.first) continue;
        std::string rel;
        switch (o.second) {
            case EntityKind::Process: rel = "fork"; break;
            case EntityKind::File: rel = (rng() % 2) ? "read" : "write"; break;
            case EntityKind::Netflow: rel = (rng() % 2) ? "send" : "recv"; break;
            case EntityKind::Memory: rel = "read"; break;
        }
        b.emit(rel, p.first, p.second, o.first, o.second, {});
    }
}

std::vector<std::string> emit_attack(Builder& b,
                                     const std::vector<TemplateInstance>& benign,
                                     std::mt19937_64& rng) {
    const std::string ext = "net:81.49.200.166";
    const std::string nginx = "proc:nginx-c";
    const std::string payload = "file:/tmp/vUgefal";
    const std::string vugefal = "proc:vUgefal";
    const std::string lat = "net:61.167.39.128";
    const std::string sshd = "proc:sshd";
    const std::string devc = "file:/var/log/devc";

    auto na = [](const std::string& ip) {
        return std::map<std::string, std::string>{{"subject.name", "nginx"},
                                                  {"object.ip", ip}};
    };
    // Shell access from the external address.
    b.emit("connect", nginx, EntityKind::Process, ext, EntityKind::Netflow,
           na("81.49.200.166"));
    b.emit("recv", nginx, EntityKind::Process, ext, EntityKind::Netflow,
           na("81.49.200.166"));
    // The compromised server is an ordinary web server: it loaded the shared
    // configuration file like every other one, which ties the attack chain
    // into the benign background through a high-degree hub.
    (void)benign;
    (void)rng;
    b.emit("read", nginx, EntityKind::Process, kNginxConf, EntityKind::File,
           {{"subject.name", "nginx"}, {"object.path", "/etc/nginx/nginx.conf"}});
    // Payload drop and execution.
    b.emit("write", nginx, EntityKind::Process, payload, EntityKind::File,
           {{"subject.name", "nginx"}, {"object.path", "/tmp/vUgefal"}});
    b.emit("execute", nginx, EntityKind::Process, vugefal, EntityKind::Process,
           {{"subject.name", "nginx"}, {"object.name", "vUgefal"}});
    b.emit("read", vugefal, EntityKind::Process, payload, EntityKind::File,
           {{"subject.name", "vUgefal"}, {"object.path", "/tmp/vUgefal"}});
    // Lateral movement, plus a callback to the command-and-control address.
    b.emit("connect", vugefal, EntityKind::Process, lat, EntityKind::Netflow,
           {{"subject.name", "vUgefal"}, {"object.ip", "61.167.39.128"}});
    b.emit("send", vugefal, EntityKind::Process, lat, EntityKind::Netflow,
           {{"subject.name", "vUgefal"}});
    b.emit("connect", vugefal, EntityKind::Process, ext, EntityKind::Netflow,
           {{"subject.name", "vUgefal"}, {"object.ip", "81.49.200.166"}});
    b.emit("send", vugefal, EntityKind::Process, ext, EntityKind::Netflow,
           {{"subject.name", "vUgefal"}});
    // sshd injection and second payload. The injected daemon talks to the
    // lateral address, and the implant checks the dropped file.
    b.emit("change", vugefal, EntityKind::Process, sshd, EntityKind::Process,
           {{"subject.name", "vUgefal"}, {"object.name", "sshd"}});
    b.emit("connect", sshd, EntityKind::Process, lat, EntityKind::Netflow,
           {{"subject.name", "sshd"}, {"object.ip", "61.167.39.128"}});
    b.emit("send", sshd, EntityKind::Process, lat, EntityKind::Netflow,
           {{"subject.name", "sshd"}});
    b.emit("write", sshd, EntityKind::Process, devc, EntityKind::File,
           {{"subject.name", "sshd"}, {"object.path", "/var/log/devc"}});
    b.emit("read", vugefal, EntityKind::Process, devc, EntityKind::File,
           {{"subject.name", "vUgefal"}, {"object.path", "/var/log/devc"}});

    return {ext, nginx, payload, vugefal, lat, sshd, devc};
}

}  // namespace

Scenario generate_cadets_scenario(const ScenarioConfig& cfg) {
    if (cfg.events_per_entity <= 0.0)
        throw InvalidConfig("events_per_entity must be positive");

    Scenario s;
    s.seed = cfg.seed;
    std::mt19937_64 rng(cfg.seed);
    Builder b{&s.events};

    std::vector<TemplateInstance> instances;
    std::size_t entities = 0;
    std::size_t idx = 0;
    while (entities < cfg.n_benign) {
        TemplateInstance t;
        switch (idx % 4) {
            case 0: t = emit_web(b, rng, idx); break;
            case 1: t = emit_edit(b, rng, idx); break;
            case 2: t = emit_ssh(b, rng, idx); break;
            default: t = emit_heartbeat(b, rng, idx); break;
        }
        entities += t.entity_count;
        std::size_t extra =
            static_cast<std::size_t>(cfg.events_per_entity * t.entity_count);
        emit_extra_events(b, rng, t, extra);
        instances.push_back(std::move(t));
        ++idx;
    }

    // Attack lands part-way through the benign timeline in the real trace;
    // with a seeded builder the position only shifts timestamps, so the
    // chain is emitted after the first half of instances for simplicity.
    s.ground_truth = emit_attack(b, instances, rng);
    std::sort(s.ground_truth.begin(), s.ground_truth.end());

    // Trailing benign activity after the attack.
    for (std::size_t i = 0; i < instances.size() / 4; ++i) {
        emit_extra_events(b, rng, instances[rng() % instances.size()], 2);
    }
    return s;
}

Scenario apply_mimicry(const Scenario& s, std::size_t n_false_events,
                       std::uint64_t seed) {
    if (s.ground_truth.empty())
        throw InvalidConfig("scenario has no malicious nodes");
    Scenario out = s;
    if (n_false_events == 0) return out;

    std::set<std::string> malicious(s.ground_truth.begin(), s.ground_truth.end());
    std::vector<const Event*> benign_events;
    for (const Event& e : s.events) {
        if (!malicious.count(e.subject_id) && !malicious.count(e.object_id))
            benign_events.push_back(&e);
    }
    if (benign_events.empty())
        throw InvalidConfig("scenario has no benign events to mimic");

    struct MaliciousEntity {
        std::string id;
        EntityKind kind;
    };
    std::vector<MaliciousEntity> mal;
    std::set<std::string> seen;
    for (const Event& e : s.events) {
        if (malicious.count(e.subject_id) && seen.insert(e.subject_id).second)
            mal.push_back({e.subject_id, e.subject_kind});
        if (malicious.count(e.object_id) && seen.insert(e.object_id).second)
            mal.push_back({e.object_id, e.object_kind});
    }

    std::mt19937_64 rng(seed);
    std::int64_t ts = 0;
    for (const Event& e : s.events) ts = std::max(ts, e.ts);

    // Audit events record process actions, so false events can only originate
    // from processes the attacker controls. Each such process cycles through a
    // small pool of copied benign neighborhoods; once the pool is exhausted,
    // further events repeat earlier interactions (raising multiplicity rather
    // than degree). Malicious files and netflows receive no direct noise: the
    // attacker cannot make passive objects emit events.
    constexpr std::size_t kPartnerPool = 2;
    std::vector<const MaliciousEntity*> mal_procs;
    for (const MaliciousEntity& m : mal)
        if (m.kind == EntityKind::Process) mal_procs.push_back(&m);

    struct Partner {
        const Event* tmpl;
        std::string id;
    };
    std::vector<std::vector<Partner>> pools;
    if (!mal_procs.empty()) {
        pools.resize(mal_procs.size());
        for (std::size_t p = 0; p < mal_procs.size(); ++p) {
            for (std::size_t j = 0; j < kPartnerPool; ++j) {
                const Event* tmpl = benign_events[rng() % benign_events.size()];
                pools[p].push_back({tmpl, tmpl->object_id + "#mc" + std::to_string(p) +
                                              "_" + std::to_string(j)});
            }
        }
    }

    for (std::size_t i = 0; i < n_false_events; ++i) {
        Event f;
        f.event_id = "mimic-" + std::to_string(i);
        f.ts = ts + 1000 * static_cast<std::int64_t>(i + 1);
        if (!mal_procs.empty()) {
            std::size_t p = i % mal_procs.size();
            const Partner& pa = pools[p][(i / mal_procs.size()) % kPartnerPool];
            f.subject_id = mal_procs[p]->id;
            f.subject_kind = EntityKind::Process;
            f.object_id = pa.id;
            f.object_kind = pa.tmpl->object_kind;
            f.relation = pa.tmpl->relation;
            for (const auto& [k, v] : pa.tmpl->attrs)
                if (k.rfind("object.", 0) == 0) f.attrs[k] = v;
        } else {
            // No controllable process: fall back to a copied benign process
            // touching the malicious object.
            const Event& tmpl = *benign_events[rng() % benign_events.size()];
            const MaliciousEntity& m = mal[rng() % mal.size()];
            f.subject_id = tmpl.subject_id + "#mc" + std::to_string(i);
            f.subject_kind = EntityKind::Process;
            f.object_id = m.id;
            f.object_kind = m.kind;
            switch (m.kind) {
                case EntityKind::File: f.relation = "read"; break;
                case EntityKind::Netflow: f.relation = "send"; break;
                case EntityKind::Memory: f.relation = "read"; break;
                default: f.relation = "fork"; break;
            }
            for (const auto& [k, v] : tmpl.attrs)
                if (k.rfind("subject.", 0) == 0) f.attrs[k] = v;
        }
        out.events.push_back(std::move(f));
    }
    return out;
}

}  // namespace provsense
