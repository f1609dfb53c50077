import { ApiClient } from "./api.js";
import { renderManagerQueue } from "./managerQueue.js";
import { renderValidationPage } from "./validationPage.js";

const api = new ApiClient("");
const app = document.getElementById("app");
if (app) {
  const token = new URLSearchParams(window.location.search).get("token");
  if (token) {
    void renderValidationPage(app, api, token);
  } else {
    void renderManagerQueue(app, api);
  }
}
