"""Timeline, link, correlation, and query analytics over the demo case."""

import pytest

from evigraph import analytics, casestudy, harmonise
from evigraph.graph import EDGE_CONFIRMED, EDGE_PROPOSED
from evigraph.types import BadProbe, BadWindow, UnknownNode


def entity(case, display_name, line):
    return casestudy.find_entity(case.graph, display_name, line)


class TestTimeline:
    def test_golden_window_csv(self, golden_case):
        events = golden_case.timeline(window=casestudy.GOLDEN_WINDOW)
        assert analytics.timeline_csv(events) == \
            casestudy.expected_timeline_csv()

    def test_full_timeline_has_seven_events(self, golden_case):
        events = golden_case.timeline()
        assert len(events) == 7
        last = events[-1]
        assert (last.date, last.time) == ("19/05/2022", "09:30:40")
        assert last.type == "Incident detection"

    def test_sorted_ascending(self, golden_case):
        epochs = [e.epoch for e in golden_case.timeline()]
        assert epochs == sorted(epochs)

    def test_window_filters_inclusively(self, golden_case):
        lo, hi = casestudy.GOLDEN_WINDOW
        events = golden_case.timeline(window=(lo, hi))
        assert events[0].epoch == lo and events[-1].epoch == hi
        assert all(lo <= e.epoch <= hi for e in events)

    def test_bad_window(self, golden_case):
        with pytest.raises(BadWindow):
            golden_case.timeline(window=(10, 5))

    def test_excluded_timestamps_do_not_appear(self, golden_case):
        excluded = {a.node_id for a in golden_case.graph.attributes.values()
                    if a.excluded}
        assert excluded
        for e in golden_case.timeline():
            assert e.attribute_node_id not in excluded

    def test_unmapped_source_falls_back(self, demo_graph):
        # Strip the classification entry coverage by using an empty map.
        events = analytics.build_timeline(
            demo_graph, classification=analytics.ClassificationMap([]))
        assert events
        assert all(e.category and e.metadata_source for e in events)

    def test_csv_shape(self, golden_case):
        text = analytics.timeline_csv(golden_case.timeline())
        lines = text.split("\n")
        assert lines[0] == analytics.TIMELINE_CSV_HEADER
        assert lines[-1] == ""
        assert all(line.count(",") == 7 for line in lines[:-1])


class TestLinks:
    def test_model_to_external_provider_is_two_hops(self, golden_case):
        ai = entity(golden_case, "File system", 2)
        ec = entity(golden_case, "External provider", 2)
        paths = analytics.find_links(golden_case.graph, ai, ec)
        assert paths
        best = paths[0]
        assert best.hop_count == 2
        nl3 = entity(golden_case, "Network logs", 4)
        assert best.elements[0] == ai
        assert best.elements[3] == nl3  # via the size match
        assert best.elements[-1] == ec  # then the destination-ip match

    def test_zero_hop_self_path(self, golden_case):
        ai = entity(golden_case, "File system", 2)
        paths = analytics.find_links(golden_case.graph, ai, ai)
        assert paths == [analytics.LinkPath((ai,), (), 0)]

    def test_proposed_edges_are_opt_in(self, golden_case):
        m = entity(golden_case, "Memory capture", 2)
        s1 = entity(golden_case, "Memory", 2)
        confirmed_only = analytics.find_links(golden_case.graph, m, s1)
        with_proposed = analytics.find_links(golden_case.graph, m, s1,
                                             include_proposed=True)
        assert len(with_proposed) >= len(confirmed_only)
        assert any(p.hop_count == 1 for p in with_proposed)

    def test_max_hops_bound(self, golden_case):
        m = entity(golden_case, "Memory capture", 2)
        ec = entity(golden_case, "External provider", 2)
        assert analytics.find_links(golden_case.graph, m, ec, max_hops=1) == []

    def test_unknown_entity(self, golden_case):
        with pytest.raises(UnknownNode):
            analytics.find_links(golden_case.graph, "e:nope", "e:nada")


class TestComponents:
    def test_confirmed_component_structure(self, golden_case):
        comp = analytics.connected_components(golden_case.graph)
        ai = entity(golden_case, "File system", 2)
        ec = entity(golden_case, "External provider", 2)
        nl3 = entity(golden_case, "Network logs", 4)
        s1 = entity(golden_case, "Memory", 2)
        slog2 = entity(golden_case, "Syslog server", 3)
        assert comp[ai] == comp[ec] == comp[nl3] == comp[s1] == comp[slog2]
        m = entity(golden_case, "Memory capture", 2)
        nl1 = entity(golden_case, "Network logs", 2)
        assert comp[m] == comp[nl1] != comp[ai]
        slog3 = entity(golden_case, "Syslog server", 4)
        assert comp[slog3] not in (comp[ai], comp[m])

    def test_covers_every_live_entity(self, golden_case):
        comp = analytics.connected_components(golden_case.graph)
        live = {eid for eid, e in golden_case.graph.entities.items()
                if not e.excluded}
        assert set(comp) == live


class TestCorrelation:
    def test_cross_source_counts(self, golden_case):
        matrix = analytics.correlate_sources(golden_case.graph)
        net = golden_case.graph.entities[
            entity(golden_case, "Network logs", 4)].source_id
        ext = golden_case.graph.entities[
            entity(golden_case, "External provider", 2)].source_id
        assert matrix.count(net, ext, EDGE_CONFIRMED) == 1
        assert matrix.count(ext, net, EDGE_CONFIRMED) == 1  # unordered
        assert matrix.count(net, net) == 0  # diagonal stays zero

    def test_serializes(self, golden_case):
        doc = analytics.correlate_sources(golden_case.graph).to_dict()
        assert doc
        for key, counts in doc.items():
            assert "|" in key
            assert set(counts) <= {EDGE_CONFIRMED, EDGE_PROPOSED}


class TestQueries:
    def test_username_probe_casefolds(self, golden_case):
        hits = analytics.query(golden_case.graph, "username", "ALEX")
        assert len(hits) == 6
        for h in hits:
            attrs = [golden_case.graph.attributes[a]
                     for a in h.matched_attributes]
            assert all(a.value == "alex" for a in attrs)

    def test_ip_probe(self, golden_case):
        hits = analytics.query(golden_case.graph, "ip", "10.0.0.20")
        owners = {h.entity_id for h in hits}
        assert entity(golden_case, "Memory capture", 2) in owners
        assert entity(golden_case, "Memory", 2) in owners

    def test_keyword_probe_searches_raw_text(self, golden_case):
        hits = analytics.query(golden_case.graph, "keyword", "finai")
        assert {h.entity_id for h in hits} == \
            {entity(golden_case, "File system", 2)}

    def test_email_probe(self, golden_case):
        hits = analytics.query(golden_case.graph, "email", "Alex@AIxz.ai")
        assert {h.entity_id for h in hits} == \
            {entity(golden_case, "File system", 2)}

    def test_time_window_probe_skips_excluded(self, golden_case):
        hits = analytics.query(golden_case.graph, "time_window",
                               (0, 4102444800))
        slog1 = entity(golden_case, "Syslog server", 2)
        assert slog1 not in {h.entity_id for h in hits}

    def test_bad_probes(self, golden_case):
        g = golden_case.graph
        for kind, value in [("username", "   "), ("ip", "999.1.2.3"),
                            ("email", "noat"), ("keyword", ""),
                            ("time_window", (5, 1)), ("nonsense", "x")]:
            with pytest.raises(BadProbe):
                analytics.query(g, kind, value)

    def test_geolocation_grouping_without_locations(self, golden_case):
        buckets = analytics.group_by_geolocation(golden_case.graph)
        assert set(buckets) == {"unlocated"}
        assert len(buckets["unlocated"]) == len(golden_case.graph.entities)
