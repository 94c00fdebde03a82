// Removes image-like elements that act as full-bleed backgrounds: they cover at
// least `minCoverage` of the viewport and sit behind the content (out of flow
// or negative z-index). Returns the number of removed elements.
(function (minCoverage) {
  "use strict";
  var vw = window.innerWidth, vh = window.innerHeight;
  var canvasArea = vw * vh;
  if (!(canvasArea > 0)) return 0;
  var IMAGE_LIKE = "img, picture, video, canvas, svg, object, embed";
  var sx = window.scrollX || 0, sy = window.scrollY || 0;

  function coverage(el) {
    var r = el.getBoundingClientRect();
    var x0 = Math.max(0, r.left + sx), y0 = Math.max(0, r.top + sy);
    var x1 = Math.min(vw, r.right + sx), y1 = Math.min(vh, r.bottom + sy);
    return x1 > x0 && y1 > y0 ? ((x1 - x0) * (y1 - y0)) / canvasArea : 0;
  }

  function behindContent(el) {
    for (var n = el; n && n !== document.body; n = n.parentElement) {
      var cs = window.getComputedStyle(n);
      var z = parseInt(cs.zIndex, 10);
      if (!isNaN(z) && z < 0) return true;
      if (cs.position === "absolute" || cs.position === "fixed") return true;
    }
    return false;
  }

  var doomed = [];
  var candidates = document.querySelectorAll(IMAGE_LIKE);
  for (var i = 0; i < candidates.length; i++) {
    var el = candidates[i];
    if (el.closest("svg") && el.tagName.toLowerCase() !== "svg") continue;
    if (coverage(el) >= minCoverage && behindContent(el)) doomed.push(el);
  }
  for (var j = 0; j < doomed.length; j++) doomed[j].remove();
  return doomed.length;
})
