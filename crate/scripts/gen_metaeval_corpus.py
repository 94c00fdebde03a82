#!/usr/bin/env python3
"""Writes fixtures/metaeval: 40 HTML slides with planted layout defects and
labels.jsonl describing which dimensions each slide is defective in."""

import json
import pathlib
import urllib.parse

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "metaeval"

BASE_CSS = """
html, body { margin: 0; background: #fff; font-family: "DejaVu Sans", Arial, sans-serif; color: #1d2733; }
.slide { width: 1280px; height: 720px; box-sizing: border-box; padding: 44px 60px; display: flex; flex-direction: column; gap: 22px; position: relative; }
h1 { margin: 0; font-size: 42px; text-align: center; }
h2 { margin: 0 0 10px; font-size: 28px; }
h3 { margin: 0 0 8px; font-size: 24px; }
p { margin: 0; font-size: 21px; line-height: 1.45; }
ul, ol { margin: 0; padding-left: 28px; font-size: 22px; line-height: 1.5; }
.row { display: flex; gap: 36px; flex: 1; }
.col { flex: 1; display: flex; flex-direction: column; justify-content: space-between; }
.card { flex: 1; background: #e8eef8; border-radius: 14px; padding: 20px 22px; display: flex; flex-direction: column; justify-content: space-between; }
img { display: block; }
.fill { flex: 1; display: flex; flex-direction: column; justify-content: space-around; }
"""

LOREM = [
    "Quarterly revenue grew across every region we track",
    "Customer retention improved after the onboarding redesign",
    "Support tickets fell by a third once self-service launched",
    "Infrastructure spend is flat while traffic doubled",
    "Three new markets opened with local partners",
    "Hiring focused on platform and data engineering",
    "Release cadence moved from monthly to weekly",
    "Latency at the 99th percentile dropped below 200 ms",
    "The mobile app reached feature parity with the web",
    "Security review closed every critical finding",
    "Pilot customers asked for deeper analytics exports",
    "Documentation coverage now spans all public APIs",
]


def svg_uri(body, w, h):
    svg = f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">{body}</svg>'
    return "data:image/svg+xml," + urllib.parse.quote(svg)


def chart(w, h, seed=0):
    bars = 8
    bw = w / (bars * 1.6)
    parts = [f'<rect width="{w}" height="{h}" fill="#f4f7fb"/>']
    for i in range(bars):
        v = 0.25 + 0.7 * (((i + seed) * 37) % 11) / 10
        bh = (h - 40) * v
        x = 20 + i * bw * 1.6
        parts.append(f'<rect x="{x:.1f}" y="{h - 20 - bh:.1f}" width="{bw:.1f}" height="{bh:.1f}" fill="{["#3b6fb6", "#e07b39", "#4a9d5b"][i % 3]}"/>')
    for k in range(1, 5):
        y = 20 + (h - 40) * k / 5
        parts.append(f'<line x1="10" x2="{w - 10}" y1="{y:.1f}" y2="{y:.1f}" stroke="#9aa8b8" stroke-width="2"/>')
    parts.append(f'<line x1="14" x2="{w - 10}" y1="{h - 20}" y2="{h - 20}" stroke="#333" stroke-width="3"/>')
    return svg_uri("".join(parts), w, h)


def photo(w, h, seed=0):
    parts = [f'<rect width="{w}" height="{h}" fill="#{(0x5a7d9a + seed * 0x101010) & 0xffffff:06x}"/>']
    step = 28
    for i in range(0, w + h, step):
        parts.append(f'<line x1="{i}" y1="0" x2="{i - h}" y2="{h}" stroke="#ffffff" stroke-opacity="0.35" stroke-width="9"/>')
    for j in range(6):
        cx = (j * 97 + seed * 31) % w
        cy = (j * 61 + seed * 17) % h
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{30 + j * 6}" fill="#f2c14e" fill-opacity="0.8"/>')
    return svg_uri("".join(parts), w, h)


def img(uri, w, h, style=""):
    return f'<img src="{uri}" width="{w}" height="{h}" style="width:{w}px;height:{h}px;{style}" alt="">'


def bullets(items, tag="ul", cls=""):
    attr = f' class="{cls}"' if cls else ""
    return f"<{tag}{attr}>" + "".join(f"<li>{t}</li>" for t in items) + f"</{tag}>"


def prose(sentences):
    return "<p style=\"font-size:26px;line-height:1.55\">" + ". ".join(sentences) + ".</p>"


def page(body, extra_css="", slide_style=""):
    style = f' style="{slide_style}"' if slide_style else ""
    return (
        "<!doctype html>\n<html><head><meta charset=\"utf-8\"><style>"
        + BASE_CSS + extra_css
        + f"</style></head><body><div class=\"slide\"{style}>{body}</div></body></html>\n"
    )


def card(title, text):
    return f'<div class="card"><h3>{title}</h3><p>{text}</p></div>'


def L(i, n):
    return [LOREM[(i + k) % len(LOREM)] for k in range(n)]


corpus = []


def add(name, html, **labels):
    full = {d: labels.get(d, "ok") for d in ("aspect", "whitespace", "collision", "imbalance")}
    corpus.append((name, html, full))


# Clean slides.
add("clean_two_columns", page("<h1>Annual Review</h1><div class=\"row\"><div class=\"col\">" + bullets(L(0, 6), cls="fill") + "</div><div class=\"col\">" + bullets(L(6, 6), cls="fill") + "</div></div>"))
add("clean_three_cards", page("<h1>Three Pillars</h1><div class=\"row\">" + "".join(card(t, " ".join(L(i, 3))) for i, t in enumerate(["Growth", "Quality", "Reach"])) + "</div>"))
add("clean_image_text", page("<h1>Platform Overview</h1><div class=\"row\"><div class=\"col\">" + img(photo(540, 480, 1), 540, 480) + "</div><div class=\"col\">" + prose(L(2, 8)) + "</div></div>"))
add("clean_grid", page("<h1>Team Updates</h1><div class=\"row\"><div class=\"col\" style=\"gap:24px\">" + card("Design", " ".join(L(1, 2))) + card("Data", " ".join(L(3, 2))) + "</div><div class=\"col\" style=\"gap:24px\">" + card("Mobile", " ".join(L(5, 2))) + card("Infra", " ".join(L(7, 2))) + "</div></div>"))
add("clean_chart", page("<h1>Traffic by Month</h1>" + img(chart(1160, 460, 2), 1160, 460) + "<p style=\"text-align:center\">" + LOREM[3] + ". " + LOREM[7] + ".</p>"))
add("clean_stats", page("<h1>Key Numbers</h1><div class=\"row\" style=\"flex:0 0 220px\">" + "".join(card(v, k) for v, k in [("42%", "retention gain"), ("3.1M", "monthly users"), ("180 ms", "p99 latency"), ("12", "new markets")]) + "</div><p>" + " ".join(L(4, 4)) + ".</p><p>" + " ".join(L(8, 3)) + ".</p>"))
add("clean_table", page("<h1>Release Plan</h1><table style=\"width:100%;flex:1;border-collapse:collapse;font-size:22px\">" + "".join("<tr>" + "".join(f"<td style=\"border:2px solid #9aa8b8;padding:10px\">{LOREM[(r * 3 + c) % 12][:26]}</td>" for c in range(3)) + "</tr>" for r in range(6)) + "</table>"))
add("clean_quote", page("<blockquote style=\"margin:0;flex:1;display:flex;flex-direction:column;justify-content:center;gap:28px\"><p style=\"font-size:44px;text-align:center;line-height:1.35\">&ldquo;" + LOREM[0] + ", and " + LOREM[1].lower() + ". " + LOREM[2] + ".&rdquo;</p><p style=\"text-align:center;font-size:28px\">Chief Executive, opening remarks</p></blockquote>", slide_style="padding:80px 90px"))
add("clean_bullets_footer", page("<h1>Lessons Learned</h1><div class=\"row\"><div class=\"col\">" + bullets(L(9, 5), cls="fill") + "</div><div class=\"col\">" + bullets(L(2, 5), cls="fill") + "</div></div><p style=\"text-align:center\">" + LOREM[11] + ".</p>"))
add("clean_agenda", page("<h1>Agenda</h1><div class=\"row\"><div class=\"col\">" + bullets(L(0, 6), "ol", "fill") + "</div><div class=\"col\">" + bullets(L(6, 6), "ol", "fill") + "</div></div>"))

# Aspect: content decides the height (too tall) or the slide is letterboxed (too wide).
tall_css = ".slide { height: auto; min-height: 720px; }"
for i, n in enumerate([14, 20, 26]):
    add(f"aspect_tall_list_{n}", page("<h1>Everything We Shipped</h1><div class=\"row\"><div class=\"col\">" + bullets(L(i, n)) + "</div><div class=\"col\">" + bullets(L(i + 5, n)) + "</div></div>", tall_css), aspect="defect")
add("aspect_tall_cards", page("<h1>Project Portfolio</h1>" + "".join("<div class=\"row\" style=\"flex:0 0 300px\">" + card(f"Track {r}A", " ".join(L(r, 3))) + card(f"Track {r}B", " ".join(L(r + 4, 3))) + "</div>" for r in range(4)), tall_css), aspect="defect")
add("aspect_tall_chart", page("<h1>Traffic Detail</h1>" + img(chart(1160, 700, 4), 1160, 700) + img(chart(1160, 560, 5), 1160, 560) + "<p style=\"text-align:center\">" + LOREM[5] + ".</p>", tall_css), aspect="defect")
for h in (400, 480, 560):
    add(f"aspect_wide_{h}", page("<h1>Highlights</h1><div class=\"row\"><div class=\"col\">" + bullets(L(h % 7, 3), cls="fill") + "</div><div class=\"col\">" + bullets(L(h % 5 + 4, 3), cls="fill") + "</div></div>", f".slide {{ height: {h}px; padding: 30px 60px; gap: 14px; }}"), aspect="defect")

# Whitespace: sparse, centred content.
center_css = ".slide { justify-content: center; align-items: center; }"
add("sparse_thanks", page("<h1>Thank you</h1>", center_css), whitespace="defect")
add("sparse_questions", page("<h1 style=\"font-size:36px\">Questions?</h1>", center_css), whitespace="defect")
add("sparse_one_line", page("<p style=\"text-align:center\">" + LOREM[4] + ".</p>", center_css), whitespace="defect")
add("sparse_small_image", page(img(photo(200, 140, 3), 200, 140), center_css), whitespace="defect")
add("sparse_title_subtitle", page("<h1>Section Two</h1><p style=\"text-align:center\">Operations</p>", center_css), whitespace="defect")
add("sparse_small_chart", page(img(chart(300, 180, 6), 300, 180) + "<p style=\"text-align:center;font-size:18px\">Figure 1</p>", center_css), whitespace="defect")
add("sparse_two_words", page("<p style=\"font-size:30px;text-align:center\">Coming soon</p>", center_css), whitespace="defect")
add("sparse_logo_row", page("<div style=\"display:flex;gap:30px\">" + img(photo(90, 90, 4), 90, 90) + img(photo(90, 90, 5), 90, 90) + "</div>", center_css), whitespace="defect")

# Collision: overlapping, escaping or off-canvas elements.
add("collide_title_on_image", page("<h1 style=\"position:absolute;left:60px;right:60px;top:180px;z-index:2\">Platform Overview</h1><div class=\"row\" style=\"margin-top:70px\"><div class=\"col\">" + img(photo(540, 480, 6), 540, 480) + "</div><div class=\"col\">" + prose(L(1, 8)) + "</div></div>"), collision="defect")
add("collide_text_boxes", page("<h1>Roadmap</h1><div class=\"row\" style=\"position:relative\"><div class=\"card\">" + "<p>" + " ".join(L(2, 4)) + "</p></div><div class=\"card\" style=\"margin-left:-260px;margin-top:90px\"><p>" + " ".join(L(6, 4)) + "</p></div></div>"), collision="defect")
add("collide_image_on_bullets", page("<h1>Findings</h1><div class=\"row\"><div class=\"col\">" + bullets(L(3, 7)) + "</div><div class=\"col\">" + bullets(L(8, 7)) + "</div></div>" + img(photo(420, 300, 7), 420, 300, "position:absolute;left:430px;top:220px"), ""), collision="defect")
add("collide_card_overflow", page("<h1>Details</h1><div class=\"row\" style=\"align-items:flex-start\">" + "".join(f"<div class=\"card\" style=\"flex:1;height:150px;justify-content:flex-start\"><p>{' '.join(L(i, 6))}</p></div>" for i in range(3)) + "</div>"), collision="defect")
add("collide_wide_banner", page("<h1>Launch</h1>" + img(chart(1600, 420, 8), 1600, 420, "margin-left:-220px") + "<div class=\"row\"><div class=\"col\"><p>" + LOREM[9] + ".</p></div><div class=\"col\"><p>" + LOREM[10] + ".</p></div></div>"), collision="defect")
add("collide_caption_on_chart", page("<h1>Conversion Funnel</h1>" + img(chart(1160, 470, 9), 1160, 470) + "<p style=\"text-align:center;margin-top:-160px;font-size:34px;font-weight:bold\">" + LOREM[0] + "</p>"), collision="defect")
add("collide_stacked_cards", page("<h1>Milestones</h1><div class=\"row\" style=\"flex-direction:column;gap:0\">" + "".join(f"<div class=\"card\" style=\"margin-bottom:-70px;border:3px solid #3b6fb6\"><p>{' '.join(L(i * 2, 3))}</p></div>" for i in range(4)) + "</div>"), collision="defect")

# Imbalance: visual weight pushed to one side or corner.
add("heavy_left_image", page("<h1>Product Tour</h1><div class=\"row\"><div class=\"col\" style=\"flex:0 0 700px\">" + img(photo(700, 500, 8), 700, 500) + "</div><div class=\"col\"><p style=\"font-size:17px\">" + LOREM[1] + ".</p><p style=\"font-size:17px\">" + LOREM[2] + ".</p><p style=\"font-size:17px\">" + LOREM[3] + ".</p></div></div>"), imbalance="defect")
add("heavy_right_image", page("<h1>Field Study</h1><div class=\"row\"><div class=\"col\"><p style=\"font-size:17px\">" + LOREM[4] + ".</p><p style=\"font-size:17px\">" + LOREM[5] + ".</p><p style=\"font-size:17px\">" + LOREM[6] + ".</p></div><div class=\"col\" style=\"flex:0 0 700px\">" + img(photo(700, 500, 9), 700, 500) + "</div></div>"), imbalance="defect")
add("heavy_left_column", page("<h1 style=\"width:560px;text-align:left\">Status</h1>" + bullets(L(0, 8), cls="fill") , ".fill { width: 530px; }"), imbalance="defect", whitespace="defect")
add("heavy_top_band", page("<h1>Summary</h1><div class=\"row\" style=\"flex:0 0 200px\">" + card("Now", LOREM[1]) + card("Next", LOREM[2]) + card("Later", LOREM[3]) + "</div>"), imbalance="defect", whitespace="defect")
add("heavy_bottom_right", page("<div style=\"position:absolute;right:60px;bottom:50px;width:520px\">" + card("Note", " ".join(L(5, 3))) + "</div>"), imbalance="defect", whitespace="defect")
add("heavy_wide_left", page("<h1>Architecture</h1><div class=\"row\"><div class=\"col\" style=\"flex:0 0 860px\">" + img(chart(860, 500, 10), 860, 500) + "</div><div class=\"col\"><p style=\"font-size:16px\">" + LOREM[7] + ".</p></div></div>"), imbalance="defect")
add("heavy_top_left_image", page(img(photo(640, 380, 10), 640, 380, "position:absolute;left:60px;top:44px") + "<p style=\"position:absolute;left:60px;top:450px;width:640px\">" + LOREM[8] + ".</p>"), imbalance="defect", whitespace="defect")

assert len(corpus) == 40, len(corpus)
assert len({n for n, _, _ in corpus}) == 40

OUT.mkdir(parents=True, exist_ok=True)
for old in OUT.glob("*.html"):
    old.unlink()
with open(OUT / "labels.jsonl", "w") as labels:
    for i, (name, html, lab) in enumerate(corpus):
        sid = f"{i:02d}_{name}"
        (OUT / f"{sid}.html").write_text(html)
        labels.write(json.dumps({"sample_id": sid, "defect_labels": lab}) + "\n")
print(f"wrote {len(corpus)} fixtures to {OUT}")
