// Layout probe. Evaluated as an expression; call the result with the node cap:
//   (<this file>)(5000)
// Returns one JSON-serializable ProbePayload object.
(function (maxNodes) {
  "use strict";
  var VERSION = "1.0.0";
  var CLASS_HINT_MAX = 256;
  var IMAGE_TAGS = { img: 1, picture: 1, video: 1, canvas: 1, object: 1, embed: 1 };
  var SKIP_TAGS = { script: 1, style: 1, template: 1, noscript: 1, head: 1, meta: 1, link: 1, title: 1 };
  var SVG_NS = "http://www.w3.org/2000/svg";

  var doc = document;
  var html = doc.documentElement;
  var body = doc.body;
  var viewportWidth = Math.max(1, Math.round(window.innerWidth || (html && html.clientWidth) || 0));

  var payload = {
    page_extent: { content_height_px: 0, viewport_width_px: viewportWidth },
    nodes: [],
    probe_version: VERSION,
    truncated: false,
    skipped_frames: 0,
    skipped_shadow_roots: 0,
    error: null
  };

  if (!html || !body) {
    payload.error = "missing " + (!html ? "documentElement" : "body");
    return payload;
  }

  payload.page_extent.content_height_px = Math.max(
    body.scrollHeight, body.offsetHeight, html.scrollHeight, html.offsetHeight, 0
  );

  var sx = window.scrollX || 0;
  var sy = window.scrollY || 0;

  function fin(v) {
    return isFinite(v) ? v : 0;
  }

  function hasOwnText(el) {
    for (var c = el.firstChild; c; c = c.nextSibling) {
      if (c.nodeType === 3 && /\S/.test(c.nodeValue)) return true;
    }
    return false;
  }

  function zIndex(cs) {
    var z = parseInt(cs.zIndex, 10);
    return isNaN(z) ? "auto" : z;
  }

  function isTransparent(color) {
    if (!color || color === "transparent") return true;
    var m = /rgba?\(([^)]*)\)/.exec(color);
    if (!m) return false;
    var parts = m[1].split(/[\s,\/]+/).filter(function (s) { return s.length > 0; });
    return parts.length >= 4 && parseFloat(parts[3]) === 0;
  }

  function positionMode(p) {
    return p === "relative" || p === "absolute" || p === "fixed" || p === "sticky" ? p : "static";
  }

  // Depth-first pre-order walk with an explicit stack of [element, parentIndex, parentOpacity, parentHidden].
  var stack = [];
  for (var k = body.children.length - 1; k >= 0; k--) stack.push([body.children[k], null, 1, false]);

  var nodes = payload.nodes;
  while (stack.length > 0) {
    var item = stack.pop();
    var el = item[0];
    var tag = el.tagName.toLowerCase();
    if (SKIP_TAGS[tag]) continue;
    if (tag === "iframe" || tag === "frame") {
      payload.skipped_frames += 1;
    }
    if (el.shadowRoot) payload.skipped_shadow_roots += 1;
    if (nodes.length >= maxNodes) {
      payload.truncated = true;
      break;
    }

    var cs = window.getComputedStyle(el);
    var own = parseFloat(cs.opacity);
    if (isNaN(own)) own = 1;
    var opacity = Math.min(1, Math.max(0, item[2] * own));
    var hidden = item[3] || cs.display === "none" || cs.visibility === "hidden" || cs.visibility === "collapse";
    var r = el.getBoundingClientRect();
    var isSvg = el.namespaceURI === SVG_NS;
    var bg = cs.backgroundImage || "none";
    var cls = el.getAttribute("class") || "";

    var index = nodes.length;
    nodes.push({
      node_index: index,
      parent_index: item[1],
      tag_name: tag,
      bbox: {
        x: fin(r.left + sx),
        y: fin(r.top + sy),
        w: Math.max(0, fin(r.width)),
        h: Math.max(0, fin(r.height))
      },
      visible: !hidden && opacity > 0,
      opacity: opacity,
      position_mode: positionMode(cs.position),
      z_index: zIndex(cs),
      has_visible_text: !hidden && hasOwnText(el),
      is_image_like: !!IMAGE_TAGS[tag] || bg.indexOf("url(") !== -1,
      is_svg_primitive: isSvg && tag !== "svg",
      background_is_transparent: isTransparent(cs.backgroundColor) && bg === "none",
      class_hint: cls.length > CLASS_HINT_MAX ? cls.slice(0, CLASS_HINT_MAX) : cls
    });

    if (tag === "iframe" || tag === "frame") continue;
    for (var j = el.children.length - 1; j >= 0; j--) {
      stack.push([el.children[j], index, opacity, hidden]);
    }
  }
  return payload;
})
