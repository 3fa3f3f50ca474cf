"""Regenerates the bundled 20-record scoring fixture."""

import json
from pathlib import Path

from PIL import Image, ImageDraw

HERE = Path(__file__).parent
IMAGES = HERE / "images"


def canvas(w=64, h=48, bg=(255, 255, 255)):
    img = Image.new("RGB", (w, h), bg)
    return img, ImageDraw.Draw(img)


def bars(heights, color):
    img, d = canvas()
    for i, hgt in enumerate(heights):
        x = 6 + i * 14
        d.rectangle([x, 46 - hgt, x + 9, 46], fill=color)
    return img


def page(blocks):
    img, d = canvas(80, 60, (248, 248, 248))
    for (x, y, w, h, c) in blocks:
        d.rectangle([x, y, x + w, y + h], fill=c)
    return img


def circles(shapes, bg=(255, 255, 255)):
    img, d = canvas(60, 60, bg)
    for (cx, cy, r, c) in shapes:
        d.ellipse([cx - r, cy - r, cx + r, cy + r], fill=c)
    return img


def curve(points, color):
    img, d = canvas(72, 48)
    d.line([(4, 44), (68, 44)], fill=(0, 0, 0))
    d.line([(4, 4), (4, 44)], fill=(0, 0, 0))
    d.line(points, fill=color, width=2)
    return img


def molecule(atoms, bonds):
    img, d = canvas(64, 64)
    for a, b in bonds:
        d.line([atoms[a], atoms[b]], fill=(20, 20, 20), width=2)
    for (x, y) in atoms:
        d.ellipse([x - 3, y - 3, x + 3, y + 3], fill=(200, 30, 30))
    return img


IMAGE_SPECS = {
    "chart_a_gt": bars([30, 18, 40, 10], (31, 119, 180)),
    "chart_a_pred": bars([30, 18, 40, 10], (31, 119, 180)),
    "chart_b_gt": bars([12, 36, 24, 30], (255, 127, 14)),
    "chart_b_pred": bars([36, 12, 30, 24], (44, 160, 44)),
    "web_a_gt": page([(5, 5, 70, 10, (40, 40, 120)), (5, 20, 30, 35, (200, 200, 200)), (40, 20, 35, 35, (220, 180, 80))]),
    "web_a_pred": page([(5, 5, 70, 10, (40, 40, 120)), (5, 20, 30, 35, (200, 200, 200)), (40, 20, 35, 30, (220, 180, 80))]),
    "web_b_gt": page([(10, 10, 60, 40, (90, 160, 90))]),
    "web_b_pred": page([(5, 40, 70, 15, (160, 60, 60))]),
    "svg_a_gt": circles([(30, 30, 18, (220, 40, 40))]),
    "svg_a_pred": circles([(30, 30, 18, (220, 40, 40))]),
    "svg_b_gt": circles([(20, 20, 10, (40, 40, 220)), (42, 42, 12, (40, 200, 40))]),
    "svg_b_pred": circles([(40, 20, 10, (40, 40, 220))]),
    "plot_a_gt": curve([(4, 44), (20, 30), (36, 22), (52, 12), (68, 6)], (200, 0, 0)),
    "plot_a_pred": curve([(4, 44), (20, 32), (36, 22), (52, 14), (68, 6)], (200, 0, 0)),
    "mol_a_gt": molecule([(32, 10), (52, 22), (52, 44), (32, 56), (12, 44), (12, 22)],
                         [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]),
    "mol_a_pred": molecule([(32, 10), (52, 22), (52, 44), (32, 56), (12, 44), (12, 22)],
                           [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]),
}

T2 = "<table><tr><td>a</td><td>b</td></tr><tr><td>c</td><td>d</td></tr></table>"

RECORDS = [
    ("doc-01", "text_doc", "The quick brown fox jumps over the lazy dog.",
     "The quick brown fox jumps over the lazy dog."),
    ("doc-02", "text_doc", "Revenue grew by 12 percent in the thrid quarter.",
     "Revenue grew by 12% in the third quarter."),
    ("doc-03", "text_doc", "Energy is $E=mc^2$ and momentum is $$p = m v$$ here.",
     "Energy is $E=mc^2$ and momentum is $$p=mv$$ here."),
    ("doc-04", "text_doc", "Summary\n" + T2 + "\nEnd.",
     "Summary\n<table><tr><th>a</th><th>b</th></tr><tr><td>c</td><td>e</td></tr></table>\nEnd."),
    ("doc-05", "text_doc", "Header only, the table was dropped.",
     "Header only\n" + T2),
    ("doc-06", "text_doc", "Mixed \\[\\frac{a}{b}\\] then " + T2,
     "Mixed \\[\\dfrac{a}{b}\\] then " + T2),
    ("frm-01", "formula", "\\frac{1}{2} + x^{2}", "\\frac {1}{2}+x^{2}"),
    ("frm-02", "formula", "\\sum_{i=1}^{n} i", "\\sum_{i=1}^{n} i^{2}"),
    ("frm-03", "formula", "$$\\left( a \\leq b \\right)$$", "( a \\le b )"),
    ("frm-04", "formula", "", "\\int_0^1 f(x) \\, dx"),
    ("tbl-01", "table", T2, T2),
    ("tbl-02", "table", "<table><tr><td>a</td></tr></table>", T2),
    ("tbl-03", "table", "<table border=1><tr><td colspan=\"2\">x</td></tr></table>",
     "<table><tr><td colspan=\"2\">x</td></tr><tr><td>y</td><td>z</td></tr></table>"),
    ("tbl-04", "table", "no table here", T2),
    ("viz-chart-a", "chart", "import matplotlib.pyplot as plt\nplt.bar([0,1,2,3],[30,18,40,10])",
     "import matplotlib.pyplot as plt\nplt.bar([0,1,2,3],[30,18,40,10])"),
    ("viz-chart-b", "chart", "<div>not python</div><p>bars</p>",
     "import matplotlib.pyplot as plt\nplt.bar([0,1,2,3],[12,36,24,30])"),
    ("viz-web-a", "web", "<!DOCTYPE html><html><body><header></header><main></main></body></html>",
     "<!DOCTYPE html><html><body><header></header><main></main></body></html>"),
    ("viz-svg-b", "svg", "<svg xmlns=\"http://www.w3.org/2000/svg\"><circle cx=\"40\" cy=\"20\" r=\"10\"/></svg>",
     "<svg xmlns=\"http://www.w3.org/2000/svg\"><circle cx=\"20\" cy=\"20\" r=\"10\"/></svg>"),
    ("viz-plot-a", "plot", "\\begin{tikzpicture}\\draw (0,0) -- (4,3);\\end{tikzpicture}",
     "\\begin{tikzpicture}\\draw (0,0) -- (4,3);\\end{tikzpicture}"),
    ("viz-mol-a", "molecule", "from rdkit import Chem\nm = Chem.MolFromSmiles('C1CCCCC1')",
     "from rdkit import Chem\nm = Chem.MolFromSmiles('c1ccccc1')"),
]

IMAGE_REFS = {
    "viz-chart-a": ("chart_a_gt", "chart_a_pred"),
    "viz-chart-b": ("chart_b_gt", "chart_b_pred"),
    "viz-web-a": ("web_a_gt", "web_a_pred"),
    "viz-svg-b": ("svg_b_gt", "svg_b_pred"),
    "viz-plot-a": ("plot_a_gt", "plot_a_pred"),
    "viz-mol-a": ("mol_a_gt", "mol_a_pred"),
}


def main():
    IMAGES.mkdir(exist_ok=True)
    for name, img in IMAGE_SPECS.items():
        img.save(IMAGES / f"{name}.png", optimize=False)
    with open(HERE / "records.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for rid, domain, pred, gt in RECORDS:
            rec = {"id": rid, "domain": domain, "prediction": pred, "ground_truth": gt}
            if rid in IMAGE_REFS:
                g, p = IMAGE_REFS[rid]
                rec["gt_image_path"] = f"images/{g}.png"
                rec["pred_image_path"] = f"images/{p}.png"
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
