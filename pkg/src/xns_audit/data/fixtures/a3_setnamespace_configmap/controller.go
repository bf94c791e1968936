package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler publishes the App endpoint into a shared ConfigMap.
type AppReconciler struct {
	client.Client
}

// Reconcile writes the endpoint into the configured ConfigMap.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}

	cm := &corev1.ConfigMap{}
	cm.SetName(app.Spec.ConfigName)
	cm.SetNamespace(app.Spec.ConfigNamespace)
	cm.Data = map[string]string{"endpoint": app.Spec.Endpoint}
	if err := r.Update(ctx, cm); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
