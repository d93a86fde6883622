export * from "./types.js";
export * from "./client.js";
export * from "./viewmodel.js";
export * from "./sitegrid.js";
export * from "./alarmlist.js";
export * from "./tickets.js";
export * from "./poll.js";
export * from "./dashboard_html.js";
